/** Pure view-state reducers: server events in, render state out.
 *
 * No business logic lives here; the client only mirrors what the
 * service reports and keeps local playback bookkeeping.
 */

import type { EndEvent, HypothesisView, JobEvent } from "./types.js";
import { statusRank } from "./types.js";

export interface JobProgress {
    status: string;
    /** One entry per hypothesis once scoring has reported, else []. */
    scores: (number | null)[];
    /** Highest frame count the server has announced. Never decreases. */
    frameCount: number;
    finished: boolean;
}

export function initialProgress(): JobProgress {
    return { status: "queued", scores: [], frameCount: 0, finished: false };
}

/** Folds one stream event into the progress snapshot.
 *
 * Tolerant by construction: unknown statuses and missing fields leave
 * the corresponding state untouched, and the announced frame range only
 * ever grows, so a stale event can never shrink the scrubber.
 */
export function applyEvent(
    progress: JobProgress, event: JobEvent | EndEvent,
): JobProgress {
    const next = { ...progress, scores: [...progress.scores] };
    if (typeof event.status === "string" &&
            statusRank(event.status) >= statusRank(progress.status)) {
        next.status = event.status;
    }
    if ("scores" in event && Array.isArray(event.scores)) {
        next.scores = event.scores.map((s) => (typeof s === "number" ? s : null));
    }
    if (typeof event.frame_count === "number" &&
            Number.isFinite(event.frame_count)) {
        next.frameCount = Math.max(next.frameCount, Math.trunc(event.frame_count));
    }
    if (next.status === "done" || next.status === "failed") {
        next.finished = true;
    }
    return next;
}

export interface PlaybackState {
    /** Index into the announced frame range; 0 when nothing arrived yet. */
    frame: number;
    playing: boolean;
    fps: number;
}

export function initialPlayback(fps: number): PlaybackState {
    return { frame: 0, playing: false, fps };
}

function clampFrame(index: number, frameCount: number): number {
    if (frameCount <= 0) return 0;
    return Math.min(Math.max(Math.trunc(index), 0), frameCount - 1);
}

/** Scrub to a frame; the result never points past the announced range. */
export function scrubTo(
    playback: PlaybackState, index: number, frameCount: number,
): PlaybackState {
    return { ...playback, frame: clampFrame(index, frameCount) };
}

export function setPlaying(
    playback: PlaybackState, playing: boolean,
): PlaybackState {
    return { ...playback, playing };
}

/** One playback tick: advance a frame, looping at the end. */
export function advanceFrame(
    playback: PlaybackState, frameCount: number,
): PlaybackState {
    if (!playback.playing || frameCount <= 0) {
        return { ...playback, frame: clampFrame(playback.frame, frameCount) };
    }
    return { ...playback, frame: (playback.frame + 1) % frameCount };
}

/** Gallery order: best score first, unscored last, ties by index. */
export function galleryOrder(
    hypotheses: readonly HypothesisView[],
): HypothesisView[] {
    return [...hypotheses].sort((a, b) => {
        if (a.score === null && b.score === null) return a.index - b.index;
        if (a.score === null) return 1;
        if (b.score === null) return -1;
        return b.score - a.score || a.index - b.index;
    });
}
