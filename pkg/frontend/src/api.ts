/** HTTP + event-stream client for the animation service.
 *
 * Runs in the browser and in node 20 tests: only global fetch, FormData
 * and ReadableStream are used, no DOM APIs.
 */

import type {
    EndEvent, FeedbackAccepted, JobEvent, JobRequest, JobView, SceneUpload,
} from "./types.js";

export class ApiError extends Error {
    constructor(readonly status: number, detail: string) {
        super(`HTTP ${status}: ${detail}`);
    }
}

export interface SseMessage {
    /** Event name; "message" when the server sent none. */
    event: string;
    data: string;
}

/** Parses a text/event-stream body into discrete messages.
 *
 * Comment lines (": ping" heartbeats) are dropped. Multi-line data is
 * joined with newlines per the SSE framing rules.
 */
export async function* parseSse(
    stream: ReadableStream<Uint8Array>,
): AsyncGenerator<SseMessage> {
    const reader = stream.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let event = "";
    let data: string[] = [];
    try {
        for (;;) {
            const { done, value } = await reader.read();
            buffer += done ? "" : decoder.decode(value, { stream: true });
            let nl: number;
            while ((nl = buffer.indexOf("\n")) >= 0) {
                const line = buffer.slice(0, nl).replace(/\r$/, "");
                buffer = buffer.slice(nl + 1);
                if (line === "") {
                    if (data.length > 0) {
                        yield { event: event || "message", data: data.join("\n") };
                    }
                    event = "";
                    data = [];
                } else if (line.startsWith(":")) {
                    // heartbeat comment
                } else if (line.startsWith("event:")) {
                    event = line.slice(6).trimStart();
                } else if (line.startsWith("data:")) {
                    data.push(line.slice(5).trimStart());
                }
            }
            if (done) break;
        }
        if (data.length > 0) {
            yield { event: event || "message", data: data.join("\n") };
        }
    } finally {
        reader.releaseLock();
    }
}

export type StreamMessage =
    | { kind: "job"; event: JobEvent }
    | { kind: "end"; event: EndEvent };

export class ApiClient {
    constructor(
        readonly base: string,
        private readonly fetchImpl: typeof fetch = fetch,
    ) {}

    private async request(path: string, init?: RequestInit): Promise<Response> {
        const resp = await this.fetchImpl(this.base + path, init);
        if (!resp.ok) {
            let detail = resp.statusText;
            try {
                const body = await resp.json();
                if (body && typeof body.detail === "string") detail = body.detail;
            } catch {
                // non-JSON error body, keep the status text
            }
            throw new ApiError(resp.status, detail);
        }
        return resp;
    }

    async health(): Promise<{ status: string }> {
        return (await this.request("/api/healthz")).json();
    }

    async uploadScene(
        splat: Blob, maskText?: string,
    ): Promise<SceneUpload> {
        const form = new FormData();
        form.append("splat", splat, "scene.ply");
        if (maskText !== undefined) {
            form.append("mask", new Blob([maskText]), "mask.txt");
        }
        const resp = await this.request("/api/scenes", {
            method: "POST", body: form,
        });
        return resp.json();
    }

    async submitJob(req: JobRequest): Promise<string> {
        const resp = await this.request("/api/jobs", {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(req),
        });
        return (await resp.json()).job_id;
    }

    async getJob(jobId: string): Promise<JobView> {
        return (await this.request(`/api/jobs/${jobId}`)).json();
    }

    frameUrl(jobId: string, k: number): string {
        return `${this.base}/api/jobs/${jobId}/frames/${k}`;
    }

    async fetchFrame(jobId: string, k: number): Promise<Blob> {
        return (await this.request(`/api/jobs/${jobId}/frames/${k}`)).blob();
    }

    async postFeedback(jobId: string, text: string): Promise<FeedbackAccepted> {
        const resp = await this.request(`/api/jobs/${jobId}/feedback`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ text }),
        });
        return resp.json();
    }

    /** Streams a job's events until the server sends the final "end". */
    async *streamJob(
        jobId: string, signal?: AbortSignal,
    ): AsyncGenerator<StreamMessage> {
        const resp = await this.request(`/api/jobs/${jobId}/stream`, { signal });
        if (!resp.body) throw new ApiError(0, "stream response has no body");
        for await (const msg of parseSse(resp.body)) {
            if (msg.event === "job") {
                yield { kind: "job", event: JSON.parse(msg.data) };
            } else if (msg.event === "end") {
                yield { kind: "end", event: JSON.parse(msg.data) };
                return;
            }
        }
    }
}

export interface WatchOptions {
    maxAttempts?: number;
    baseDelayMs?: number;
    /** Called on drops and reconnects so the UI can show a banner. */
    onBanner?: (text: string | null) => void;
    sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) =>
    new Promise<void>((resolve) => setTimeout(resolve, ms));

/** Follows a job's stream to completion, reconnecting with backoff.
 *
 * A clean "end" message stops the watch; a dropped connection retries
 * with doubling delay until maxAttempts is exhausted.
 */
export async function watchJob(
    client: ApiClient,
    jobId: string,
    onMessage: (msg: StreamMessage) => void,
    options: WatchOptions = {},
): Promise<EndEvent> {
    const maxAttempts = options.maxAttempts ?? 5;
    const baseDelay = options.baseDelayMs ?? 500;
    const sleep = options.sleep ?? defaultSleep;
    let lastError: unknown = null;
    for (let attempt = 0; attempt < maxAttempts; attempt++) {
        if (attempt > 0) {
            options.onBanner?.(`connection lost, retrying (${attempt}/${maxAttempts - 1})`);
            await sleep(baseDelay * 2 ** (attempt - 1));
        }
        try {
            for await (const msg of client.streamJob(jobId)) {
                options.onBanner?.(null);
                onMessage(msg);
                if (msg.kind === "end") return msg.event;
            }
            // stream closed without an end event; treat as a drop
            lastError = new Error("stream closed early");
        } catch (e) {
            if (e instanceof ApiError && e.status === 404) throw e;
            lastError = e;
        }
    }
    options.onBanner?.("disconnected");
    throw lastError instanceof Error ? lastError : new Error(String(lastError));
}
