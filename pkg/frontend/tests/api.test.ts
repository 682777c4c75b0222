import { describe, expect, it } from "vitest";

import { ApiError, Client, isStale } from "../src/api.js";

function fakeFetch(status: number, body: unknown) {
  const calls: Array<{ input: string; init?: RequestInit }> = [];
  const fn = async (input: string, init?: RequestInit): Promise<Response> => {
    calls.push({ input, init });
    return new Response(JSON.stringify(body), { status });
  };
  return { fn, calls };
}

describe("Client", () => {
  it("parses JSON payloads from GET routes", async () => {
    const { fn, calls } = fakeFetch(200, { kappa: null, pairings_rated: 0, ratings_per_pairing: 0 });
    const client = new Client("http://x", fn);
    const agreement = await client.agreement();
    expect(agreement.kappa).toBeNull();
    expect(calls[0]!.input).toBe("http://x/api/agreement");
  });

  it("posts verdict bodies with pairing id, verdict and rater", async () => {
    const { fn, calls } = fakeFetch(200, { complete: false });
    const client = new Client("", fn);
    await client.submitVerdict("p001", "FIRST", "alice");
    expect(calls[0]!.input).toBe("/api/verdict");
    expect(JSON.parse(calls[0]!.init!.body as string)).toEqual({
      pairing_id: "p001",
      verdict: "FIRST",
      rater: "alice",
    });
  });

  it("surfaces the service error message with the HTTP status", async () => {
    const { fn } = fakeFetch(409, { error: "pairing p001 is stale" });
    const client = new Client("", fn);
    const err = await client.submitVerdict("p001", "FIRST", "a").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.message).toBe("pairing p001 is stale");
    expect(isStale(err)).toBe(true);
  });

  it("maps network failure to status 0, which is not stale", async () => {
    const client = new Client("", async () => {
      throw new Error("ECONNREFUSED");
    });
    const err = await client.tournament().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
    expect(err.message).toContain("unreachable");
    expect(isStale(err)).toBe(false);
  });

  it("escapes asset names in URLs", () => {
    const client = new Client("http://h:1");
    expect(client.assetUrl("a b.svg")).toBe("http://h:1/assets/a%20b.svg");
  });
});
