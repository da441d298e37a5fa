// End-to-end scripted session against a replay-backed service: the same
// upload -> prompt -> stream -> feedback path the page drives, exercised
// through the real client and reducers with no mocks.
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, watchJob } from "../src/api.js";
import { applyEvent, initialProgress, scrubTo, initialPlayback } from "../src/state.js";

const REPO = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");
const FIXTURES = join(REPO, "fixtures", "vase_raise");
const PROMPT = "raise the vase, then fade it out";
const FEEDBACK = "spin faster in the first second, "
    + "fade more quickly in the final half-second";

const port = 18000 + (process.pid % 2000);
const base = `http://127.0.0.1:${port}`;

let server: ChildProcess;
let dataDir: string;

async function waitForHealth(client: ApiClient): Promise<void> {
    const deadline = Date.now() + 30_000;
    for (;;) {
        try {
            await client.health();
            return;
        } catch {
            if (Date.now() > deadline) throw new Error("service never came up");
            await new Promise((r) => setTimeout(r, 200));
        }
    }
}

beforeAll(async () => {
    dataDir = mkdtempSync(join(tmpdir(), "splatfx-web-"));
    server = spawn("python3", [
        "-m", "splatfx.cli", "serve", "--port", String(port),
        "--transport", "replay", "--fixtures", FIXTURES,
        "--data-dir", dataDir,
    ], {
        cwd: REPO,
        env: { ...process.env, PYTHONPATH: join(REPO, "src") },
        stdio: ["ignore", "inherit", "inherit"],
    });
    await waitForHealth(new ApiClient(base));
}, 40_000);

afterAll(() => {
    server?.kill();
    rmSync(dataDir, { recursive: true, force: true });
});

describe("full ui loop over replay fixtures", () => {
    it("upload, animate, watch, refine to revision 2 in under 90 s", async () => {
        const started = Date.now();
        const client = new ApiClient(base);

        // scene upload panel
        const splat = new Blob([readFileSync(join(FIXTURES, "scene.ply"))]);
        const maskText = readFileSync(join(FIXTURES, "mask.txt"), "utf8");
        const scene = await client.uploadScene(splat, maskText);
        expect(scene.splat_count).toBe(1000);
        expect(scene.mask_size).toBe(1000);

        // prompt form; fields left at their defaults
        const jobId = await client.submitJob({
            scene_id: scene.scene_id, prompt: PROMPT,
        });

        // live status stream folded through the page's reducer
        let progress = initialProgress();
        const statuses: string[] = [];
        const end = await watchJob(client, jobId, (msg) => {
            progress = applyEvent(progress, msg.event);
            statuses.push(progress.status);
        });
        expect(end.status).toBe("done");
        expect(progress.status).toBe("done");
        expect(statuses).toContain("scoring");

        // at least one scored hypothesis and the full frame sequence
        const scored = progress.scores.filter((s) => s !== null);
        expect(scored.length).toBeGreaterThanOrEqual(1);
        expect(progress.frameCount).toBeGreaterThanOrEqual(91);

        // scrub to the last announced frame and fetch it, as the player does
        const playback = scrubTo(initialPlayback(30), 1e9, progress.frameCount);
        expect(playback.frame).toBe(progress.frameCount - 1);
        const frame = await client.fetchFrame(jobId, playback.frame);
        expect(frame.size).toBeGreaterThan(0);
        const view = await client.getJob(jobId);
        expect(view.selected_index).not.toBeNull();
        expect(view.phases.length).toBeGreaterThanOrEqual(2);

        // feedback box, then auto-switch to the new revision
        const accepted = await client.postFeedback(jobId, FEEDBACK);
        expect(accepted.revision).toBe(2);
        let revision = initialProgress();
        await watchJob(client, accepted.job_id, (msg) => {
            revision = applyEvent(revision, msg.event);
        });
        const revisionView = await client.getJob(accepted.job_id);
        expect(revisionView.status).toBe("done");
        expect(revisionView.revision).toBe(2);
        expect(revisionView.parent_id).toBe(jobId);
        expect(revisionView.frame_count).toBeGreaterThanOrEqual(91);
        expect(revisionView.selected_sources).not.toEqual(view.selected_sources);

        const elapsed = Date.now() - started;
        expect(elapsed).toBeLessThan(90_000);
    }, 95_000);
});
