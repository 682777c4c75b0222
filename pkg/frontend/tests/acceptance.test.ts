import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";
import { Controller } from "../src/controller.js";
import { renderProgress } from "../src/view.js";
import type { Verdict } from "../src/types.js";

// End-to-end flow against the real tournament service: an automated session
// standing in for the browser (same client + controller code main.ts uses,
// with asset loads replayed as HTTP fetches).

const SVG = `<svg xmlns="http://www.w3.org/2000/svg" width="40" height="40"><rect width="40" height="40" fill="#eee"/></svg>`;

let workDir: string;
let proc: ChildProcess;
let baseUrl: string;

function writeConfig(dir: string): string {
  const tileA = join(dir, "tile_a.svg");
  const tileB = join(dir, "tile_b.svg");
  writeFileSync(tileA, SVG);
  writeFileSync(tileB, SVG);
  const assets: Record<string, string> = {};
  const contenders = [
    { config_id: "a", cost: 30 },
    { config_id: "b", cost: 10 },
    { config_id: "c", cost: 20 },
  ].map(({ config_id, cost }) => {
    const names = [`${config_id}_1.svg`, `${config_id}_2.svg`];
    assets[names[0]!] = tileA;
    assets[names[1]!] = tileB;
    return {
      config_id,
      cost,
      label: `method ${config_id}`,
      assets: names,
      step_texts: ["step 1: start", "step 2: finish"],
    };
  });
  const path = join(dir, "tournament.json");
  writeFileSync(path, JSON.stringify({ contenders, assets }));
  return path;
}

function startService(configPath: string, dir: string): Promise<string> {
  const uiDir = fileURLToPath(new URL("../public", import.meta.url));
  proc = spawn("python3", [
    "-m",
    "beamlat.cli",
    "tournament",
    configPath,
    "--serve",
    "--port",
    "0",
    "--journal",
    join(dir, "journal.jsonl"),
    "--ui",
    uiDir,
  ]);
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("service did not start")), 15000);
    let out = "";
    proc.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const match = out.match(/serving on (http:\/\/[^\s]+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    proc.stderr!.on("data", (chunk: Buffer) => {
      process.stderr.write(chunk);
    });
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early with code ${code}`));
    });
  });
}

/** Mimic the browser's image loading: fetch every tile of the open pairing
 *  and open the gate only if all of them arrive. */
async function loadAssets(controller: Controller, client: Client): Promise<void> {
  const pairing = controller.state.pairing!;
  const names = [...pairing.left.assets, ...pairing.right.assets];
  let ok = true;
  for (const name of names) {
    const res = await fetch(client.assetUrl(name));
    if (!res.ok || !(res.headers.get("content-type") ?? "").includes("svg")) ok = false;
  }
  controller.setAssetGate(ok ? "ready" : "failed");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "beamlat-ui-"));
  baseUrl = await startService(writeConfig(workDir), workDir);
}, 30000);

afterAll(() => {
  proc?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

describe("annotation session against the live service", () => {
  it("serves the UI page and the tiles", async () => {
    const page = await fetch(`${baseUrl}/`);
    expect(page.status).toBe(200);
    expect(await page.text()).toContain('<main id="app">');
    const tile = await fetch(`${baseUrl}/assets/a_1.svg`);
    expect(tile.status).toBe(200);
    expect(tile.headers.get("content-type")).toBe("image/svg+xml");
  });

  it("completes two pairings to a champion", async () => {
    const client = new Client(baseUrl);
    const controller = new Controller(client, "acc-alice");
    await controller.refresh();

    expect(controller.state.phase).toBe("pairing");
    expect(controller.state.pairing!.pairing_id).toBe("p001");
    expect(controller.state.pairing!.left.config_id).toBe("a");
    expect(controller.state.pairing!.right.config_id).toBe("b");
    expect(controller.state.totalPairings).toBe(2);

    await loadAssets(controller, client);
    await controller.submit("FIRST"); // a beats b

    expect(controller.state.phase).toBe("pairing");
    expect(controller.state.pairing!.pairing_id).toBe("p002");
    await loadAssets(controller, client);
    await controller.submit("BOTH_BAD"); // cheaper of a(30) vs c(20)

    expect(controller.state.phase).toBe("champion");
    expect(controller.state.champion!.config_id).toBe("c");
    expect(controller.state.resolved).toBe(2);
  }, 20000);

  it("records exactly one verdict for a stale double-submit", async () => {
    const client = new Client(baseUrl);
    const err = await client
      .submitVerdict("p001", "SECOND", "acc-alice")
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);

    const state = await client.tournament();
    const p001 = state.pairings.find((p) => p.pairing_id === "p001")!;
    const mine = p001.ratings.filter((r) => r.rater === "acc-alice");
    expect(mine).toHaveLength(1);
    expect(mine[0]!.verdict).toBe("FIRST");
    expect(p001.winner_id).toBe("a"); // unchanged by the stale attempt
  });

  it("shows kappa = 1.00 once a second rater agrees everywhere", async () => {
    const client = new Client(baseUrl);
    const replay: Array<[string, Verdict]> = [
      ["p001", "FIRST"],
      ["p002", "BOTH_BAD"],
    ];
    for (const [pairingId, verdict] of replay) {
      await client.submitVerdict(pairingId, verdict, "acc-bob");
    }

    const agreement = await client.agreement();
    expect(agreement.kappa).toBe(1.0);
    expect(agreement.ratings_per_pairing).toBe(2);
    expect(agreement.pairings_rated).toBe(2);

    const panel = renderProgress(await client.tournament(), agreement);
    expect(panel).toContain("κ = 1.00");
  });
});
