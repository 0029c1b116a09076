// @vitest-environment jsdom
//
// Scripted end-to-end annotation session: drives the real UI (jsdom DOM)
// against the real Python service over HTTP, completes all six fixture
// items, then checks the de-blinded aggregate.
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { HttpApi } from "../src/api.js";
import { AnnotationApp } from "../src/app.js";
import {
  loadFixtureItems,
  startServer,
  type FixtureItem,
  type RunningServer,
} from "./server.js";

const ANNOTATOR = "annotator1";
const FORBIDDEN = ["baseline", "reranked", "verdict", "score", "system"];

let server: RunningServer;
let fixtures: FixtureItem[];

beforeAll(async () => {
  server = await startServer(ANNOTATOR);
  fixtures = await loadFixtureItems();
});

afterAll(async () => {
  await server.stop();
});

async function waitFor(predicate: () => boolean, what: string): Promise<void> {
  const deadline = Date.now() + 10_000;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

function check(root: HTMLElement, name: string, value: string): void {
  const input = root.querySelector<HTMLInputElement>(
    `input[name="${name}"][value="${value}"]`,
  );
  if (!input) throw new Error(`no control ${name}=${value}`);
  input.click();
}

describe("scripted annotation session", () => {
  it("completes all six items end to end and aggregates correctly", async () => {
    const root = document.createElement("main");
    document.body.appendChild(root);
    const app = new AnnotationApp(root, new HttpApi(server.baseUrl), ANNOTATOR);
    await app.start();

    for (let i = 0; i < 6; i++) {
      await waitFor(
        () => root.textContent?.includes(`Item ${i + 1} of 6`) ?? false,
        `item ${i + 1}`,
      );

      // blinding: nothing user-visible names a system
      const page = root.innerHTML.toLowerCase();
      for (const word of FORBIDDEN) expect(page).not.toContain(word);

      const source = root.querySelector(".source p")?.textContent ?? "";
      const fixture = fixtures.find((f) => f.source_en === source);
      expect(fixture).toBeDefined();
      const shown = [...root.querySelectorAll<HTMLElement>(".hindi")].map(
        (el) => el.textContent,
      );
      expect(shown).toHaveLength(2);
      expect(new Set(shown)).toEqual(
        new Set([fixture!.baseline_text, fixture!.reranked_text]),
      );
      // the test knows the fixture, so it can de-blind; the page cannot
      const rerankedSide = shown[0] === fixture!.reranked_text ? "a" : "b";
      const baselineSide = rerankedSide === "a" ? "b" : "a";

      const submit = root.querySelector<HTMLButtonElement>("#submit")!;
      expect(submit.disabled).toBe(true);

      check(root, `preserved_${rerankedSide}`, "yes");
      check(root, `preserved_${baselineSide}`, "no");
      check(root, `fluency_${rerankedSide}`, "4");
      expect(submit.disabled).toBe(true); // still incomplete
      check(root, `fluency_${baselineSide}`, "3");
      // third item is a deliberate tie, the rest prefer the gendered output
      check(root, "preference", i === 2 ? "tie" : rerankedSide.toUpperCase());

      expect(submit.disabled).toBe(false);
      const form = root.querySelector<HTMLFormElement>("#judgment-form")!;
      form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    }

    await waitFor(
      () => root.textContent?.includes("All 6 items annotated") ?? false,
      "completion screen",
    );

    const res = await fetch(`${server.baseUrl}/api/results`);
    expect(res.status).toBe(200);
    const results = await res.json();
    expect(results.n_judgments).toBe(6);
    expect(results.preference.tie).toBe(1);
    expect(results.preference.reranked).toBe(5);
    expect(results.preference.baseline).toBe(0);
    // the tie is excluded from the non-tie rate denominator
    expect(results.preference.non_tie_reranked_rate).toBe(100.0);
    expect(results.systems.reranked.preservation_pct).toBe(100.0);
    expect(results.systems.baseline.preservation_pct).toBe(0.0);
    expect(results.systems.reranked.mean_fluency).toBe(4.0);
    expect(results.systems.baseline.mean_fluency).toBe(3.0);
  });

  it("never leaks system identifiers in any API payload", async () => {
    for (const fixture of fixtures) {
      const res = await fetch(
        `${server.baseUrl}/api/item/${encodeURIComponent(fixture.item_id)}` +
          `?annotator=${ANNOTATOR}`,
      );
      expect(res.status).toBe(200);
      const raw = (await res.text()).toLowerCase();
      for (const word of FORBIDDEN) expect(raw).not.toContain(word);
    }
    const session = (
      await fetch(`${server.baseUrl}/api/session?annotator=${ANNOTATOR}`)
    ).text();
    const raw = (await session).toLowerCase();
    for (const word of FORBIDDEN) expect(raw).not.toContain(word);
  });
});
