/** DOM wiring for the single-page client.
 *
 * Flow: upload a splat scene, submit a prompt, follow the job's event
 * stream while frames arrive, scrub or play the received frames, then
 * iterate through the feedback box. All text panels are read-only; the
 * only inputs the server ever sees are prompts and feedback.
 */

import { ApiClient, watchJob } from "./api.js";
import {
    advanceFrame, applyEvent, galleryOrder, initialPlayback, initialProgress,
    scrubTo, setPlaying,
    type JobProgress, type PlaybackState,
} from "./state.js";
import type { JobView } from "./types.js";

const client = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

const ui = {
    uploadForm: el<HTMLFormElement>("upload-form"),
    splatInput: el<HTMLInputElement>("splat-input"),
    maskInput: el<HTMLInputElement>("mask-input"),
    sceneInfo: el<HTMLElement>("scene-info"),
    promptForm: el<HTMLFormElement>("prompt-form"),
    promptInput: el<HTMLTextAreaElement>("prompt-input"),
    mInput: el<HTMLInputElement>("m-input"),
    banner: el<HTMLElement>("banner"),
    status: el<HTMLElement>("job-status"),
    phases: el<HTMLElement>("phases"),
    gallery: el<HTMLElement>("gallery"),
    frame: el<HTMLImageElement>("frame"),
    scrubber: el<HTMLInputElement>("scrubber"),
    playButton: el<HTMLButtonElement>("play-button"),
    frameLabel: el<HTMLElement>("frame-label"),
    sources: el<HTMLElement>("sources"),
    diagnostics: el<HTMLElement>("diagnostics"),
    feedbackForm: el<HTMLFormElement>("feedback-form"),
    feedbackInput: el<HTMLTextAreaElement>("feedback-input"),
};

let sceneId: string | null = null;
let jobId: string | null = null;
let progress: JobProgress = initialProgress();
let playback: PlaybackState = initialPlayback(30);
let playTimer: number | null = null;

function setBanner(text: string | null): void {
    ui.banner.textContent = text ?? "";
    ui.banner.hidden = text === null;
}

function renderPlayback(): void {
    const count = progress.frameCount;
    ui.scrubber.max = String(Math.max(count - 1, 0));
    ui.scrubber.value = String(playback.frame);
    ui.scrubber.disabled = count === 0;
    ui.frameLabel.textContent = count
        ? `frame ${playback.frame + 1} / ${count}` : "no frames yet";
    ui.playButton.textContent = playback.playing ? "pause" : "play";
    if (jobId && count > 0) {
        ui.frame.src = client.frameUrl(jobId, playback.frame);
        ui.frame.hidden = false;
    } else {
        ui.frame.hidden = true;
    }
}

function renderSnapshot(view: JobView): void {
    ui.status.textContent =
        `job ${view.id} (revision ${view.revision}): ${view.status}`;
    ui.phases.textContent = view.phases
        .map((p) => `[${p.t_start.toFixed(2)}s - ${p.t_end.toFixed(2)}s] `
            + `${p.name}: ${p.description}`)
        .join("\n");

    ui.gallery.replaceChildren();
    for (const hyp of galleryOrder(view.scores)) {
        const card = document.createElement("div");
        card.className = "card";
        if (hyp.index === view.selected_index) card.classList.add("selected");
        const score = document.createElement("div");
        score.className = "score";
        score.textContent = hyp.score === null ? "..." : hyp.score.toFixed(0);
        card.appendChild(score);
        if (hyp.index === view.selected_index && jobId
                && progress.frameCount > 0) {
            const thumb = document.createElement("img");
            thumb.className = "thumb";
            thumb.src = client.frameUrl(jobId, 0);
            card.appendChild(thumb);
        }
        const label = document.createElement("div");
        label.textContent = `hypothesis ${hyp.index + 1}`;
        card.appendChild(label);
        ui.gallery.appendChild(card);
    }

    ui.sources.textContent = view.selected_sources
        ? Object.entries(view.selected_sources)
            .map(([key, src]) => `# ${key}\n${src}`).join("\n\n")
        : "";
    ui.diagnostics.textContent = view.diagnostics.join("\n");
    ui.feedbackForm.hidden = view.status !== "done";
}

async function refreshSnapshot(): Promise<void> {
    if (!jobId) return;
    renderSnapshot(await client.getJob(jobId));
}

function startPlayTimer(): void {
    if (playTimer !== null) window.clearInterval(playTimer);
    playTimer = window.setInterval(() => {
        if (!playback.playing) return;
        playback = advanceFrame(playback, progress.frameCount);
        renderPlayback();
    }, 1000 / playback.fps);
}

async function followJob(id: string): Promise<void> {
    jobId = id;
    progress = initialProgress();
    playback = initialPlayback(playback.fps);
    renderPlayback();
    try {
        await watchJob(client, id, (msg) => {
            progress = applyEvent(progress, msg.event);
            playback = scrubTo(playback, playback.frame, progress.frameCount);
            renderPlayback();
            void refreshSnapshot();
        }, { onBanner: setBanner });
    } catch (e) {
        setBanner(`stream failed: ${e instanceof Error ? e.message : e}`);
    }
    await refreshSnapshot();
}

ui.uploadForm.addEventListener("submit", async (e) => {
    e.preventDefault();
    const splat = ui.splatInput.files?.[0];
    if (!splat) return;
    try {
        const mask = ui.maskInput.files?.[0];
        const result = await client.uploadScene(
            splat, mask ? await mask.text() : undefined);
        sceneId = result.scene_id;
        ui.sceneInfo.textContent = `scene ${result.scene_id}: `
            + `${result.splat_count} splats, ${result.mask_size} selected`;
        setBanner(null);
    } catch (err) {
        setBanner(`upload failed: ${err instanceof Error ? err.message : err}`);
    }
});

ui.promptForm.addEventListener("submit", async (e) => {
    e.preventDefault();
    if (!sceneId) {
        setBanner("upload a scene first");
        return;
    }
    try {
        const id = await client.submitJob({
            scene_id: sceneId,
            prompt: ui.promptInput.value,
            m: Number(ui.mInput.value) || 4,
        });
        setBanner(null);
        void followJob(id);
    } catch (err) {
        setBanner(`submit failed: ${err instanceof Error ? err.message : err}`);
    }
});

ui.feedbackForm.addEventListener("submit", async (e) => {
    e.preventDefault();
    if (!jobId) return;
    try {
        const accepted = await client.postFeedback(jobId, ui.feedbackInput.value);
        ui.feedbackInput.value = "";
        setBanner(null);
        // jump straight to the new revision as it runs
        void followJob(accepted.job_id);
    } catch (err) {
        setBanner(`feedback failed: ${err instanceof Error ? err.message : err}`);
    }
});

ui.scrubber.addEventListener("input", () => {
    playback = setPlaying(playback, false);
    playback = scrubTo(playback, Number(ui.scrubber.value), progress.frameCount);
    renderPlayback();
});

ui.playButton.addEventListener("click", () => {
    playback = setPlaying(playback, !playback.playing);
    renderPlayback();
});

startPlayTimer();
renderPlayback();
void client.health().then(
    () => setBanner(null),
    () => setBanner("service unreachable"));
