/** Wire types mirroring the service's JSON schemas. */

export const STATUS_ORDER = [
    "queued", "designing", "generating", "scoring", "refining", "done",
] as const;

export type JobStatus = (typeof STATUS_ORDER)[number] | "failed";

export function statusRank(status: string): number {
    if (status === "failed") return STATUS_ORDER.length;
    const k = (STATUS_ORDER as readonly string[]).indexOf(status);
    return k < 0 ? -1 : k;
}

export interface SceneUpload {
    scene_id: string;
    splat_count: number;
    mask_size: number;
}

export interface JobRequest {
    scene_id: string;
    prompt: string;
    m?: number;
    fps?: number;
    duration_hint?: number;
    auto_rounds?: number;
    width?: number;
    height?: number;
}

export interface PhaseView {
    name: string;
    t_start: number;
    t_end: number;
    description: string;
}

export interface HypothesisView {
    index: number;
    score: number | null;
    sources: Record<string, string> | null;
}

/** Full job snapshot; only ever built from server JSON. */
export interface JobView {
    id: string;
    status: JobStatus;
    prompt: string;
    phases: PhaseView[];
    total_duration: number | null;
    scores: HypothesisView[];
    selected_index: number | null;
    selected_sources: Record<string, string> | null;
    frame_count: number;
    fps: number;
    revision: number;
    parent_id: string | null;
    diagnostics: string[];
}

/** Incremental payload pushed on the job event stream. */
export interface JobEvent {
    status: string;
    scores?: (number | null)[];
    frame_count?: number;
}

export interface EndEvent {
    status: string;
    frame_count: number;
    job_id: string;
}

export interface FeedbackAccepted {
    job_id: string;
    revision: number;
}
