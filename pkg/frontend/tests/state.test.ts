import { describe, expect, it } from "vitest";

import {
    advanceFrame, applyEvent, galleryOrder, initialPlayback, initialProgress,
    scrubTo, setPlaying,
} from "../src/state.js";
import { STATUS_ORDER, statusRank, type JobEvent } from "../src/types.js";

function mulberry32(seed: number): () => number {
    let a = seed >>> 0;
    return () => {
        a = (a + 0x6d2b79f5) >>> 0;
        let t = Math.imul(a ^ (a >>> 15), 1 | a);
        t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

/** Random event sequence whose statuses respect the server's order. */
function randomRun(rand: () => number): JobEvent[] {
    const events: JobEvent[] = [];
    let rank = 0;
    let frames = 0;
    const steps = 1 + Math.floor(rand() * 12);
    for (let k = 0; k < steps; k++) {
        rank = Math.min(rank + Math.floor(rand() * 2), STATUS_ORDER.length - 1);
        const event: JobEvent = { status: STATUS_ORDER[rank] };
        if (rand() < 0.4) {
            const m = 1 + Math.floor(rand() * 4);
            event.scores = Array.from({ length: m }, () =>
                rand() < 0.2 ? null : Math.floor(rand() * 101));
        }
        if (rand() < 0.5) {
            frames += Math.floor(rand() * 40);
            event.frame_count = frames;
        }
        events.push(event);
    }
    if (rand() < 0.2) events.push({ status: "failed" });
    return events;
}

describe("job progress reducer", () => {
    it("tracks status, scores, and frames from a normal run", () => {
        let p = initialProgress();
        p = applyEvent(p, { status: "designing" });
        p = applyEvent(p, { status: "scoring", scores: [87, null, 42] });
        expect(p.scores).toEqual([87, null, 42]);
        expect(p.finished).toBe(false);
        p = applyEvent(p, { status: "done", frame_count: 91 });
        expect(p.status).toBe("done");
        expect(p.frameCount).toBe(91);
        expect(p.finished).toBe(true);
    });

    it("never moves status backwards", () => {
        let p = applyEvent(initialProgress(), { status: "scoring" });
        p = applyEvent(p, { status: "designing" });
        expect(p.status).toBe("scoring");
    });

    it("never shrinks the announced frame range", () => {
        let p = applyEvent(initialProgress(), { status: "done", frame_count: 91 });
        p = applyEvent(p, { status: "done", frame_count: 12 });
        expect(p.frameCount).toBe(91);
    });

    it("ignores malformed payload fields", () => {
        let p = initialProgress();
        p = applyEvent(p, { status: "nonsense" } as JobEvent);
        p = applyEvent(p, { status: "designing", frame_count: NaN } as JobEvent);
        expect(p.status).toBe("designing");
        expect(p.frameCount).toBe(0);
    });

    it("does not mutate its input", () => {
        const before = applyEvent(initialProgress(), { status: "designing" });
        const snapshot = JSON.stringify(before);
        applyEvent(before, { status: "done", frame_count: 5, scores: [1] });
        expect(JSON.stringify(before)).toBe(snapshot);
    });

    it("survives 500 fuzzed runs and keeps its invariants", () => {
        const rand = mulberry32(20240601);
        for (let run = 0; run < 500; run++) {
            let p = initialProgress();
            let playback = initialPlayback(30);
            for (const event of randomRun(rand)) {
                const prev = p;
                p = applyEvent(p, event);
                expect(statusRank(p.status))
                    .toBeGreaterThanOrEqual(statusRank(prev.status));
                expect(p.frameCount).toBeGreaterThanOrEqual(prev.frameCount);
                playback = scrubTo(playback,
                    Math.floor(rand() * 200) - 20, p.frameCount);
                expect(playback.frame).toBeGreaterThanOrEqual(0);
                expect(playback.frame)
                    .toBeLessThanOrEqual(Math.max(p.frameCount - 1, 0));
            }
        }
    });
});

describe("playback state", () => {
    it("clamps scrubbing into the announced range", () => {
        const p = initialPlayback(30);
        expect(scrubTo(p, 500, 91).frame).toBe(90);
        expect(scrubTo(p, -3, 91).frame).toBe(0);
        expect(scrubTo(p, 45.9, 91).frame).toBe(45);
        expect(scrubTo(p, 10, 0).frame).toBe(0);
    });

    it("advances only while playing and wraps at the end", () => {
        let p = setPlaying(initialPlayback(30), true);
        p = scrubTo(p, 89, 91);
        p = advanceFrame(p, 91);
        expect(p.frame).toBe(90);
        p = advanceFrame(p, 91);
        expect(p.frame).toBe(0);
        const paused = advanceFrame(setPlaying(p, false), 91);
        expect(paused.frame).toBe(p.frame);
    });

    it("re-clamps when the range is smaller than the cursor", () => {
        const p = scrubTo(initialPlayback(30), 50, 91);
        expect(advanceFrame(setPlaying(p, false), 10).frame).toBe(9);
    });
});

describe("gallery ordering", () => {
    const hyp = (index: number, score: number | null) =>
        ({ index, score, sources: null });

    it("sorts by descending score with ties broken by index", () => {
        const ordered = galleryOrder(
            [hyp(0, 60), hyp(1, 87), hyp(2, 87), hyp(3, 12)]);
        expect(ordered.map((h) => h.index)).toEqual([1, 2, 0, 3]);
    });

    it("puts unscored hypotheses last", () => {
        const ordered = galleryOrder([hyp(0, null), hyp(1, 40), hyp(2, null)]);
        expect(ordered.map((h) => h.index)).toEqual([1, 0, 2]);
    });

    it("leaves the input untouched", () => {
        const input = [hyp(0, 1), hyp(1, 2)];
        galleryOrder(input);
        expect(input.map((h) => h.index)).toEqual([0, 1]);
    });
});
