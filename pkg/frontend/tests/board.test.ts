import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  FakeServer,
  makeCandidate,
  makeScores,
  problemSession,
} from "./fake-server.js";
import { bootApp, flush, q, qa, resetDom, selectOption } from "./helpers.js";

beforeEach(() => {
  resetDom();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("concept board", () => {
  it("shows a placeholder with no session selected", async () => {
    const fake = new FakeServer();
    const { root } = await bootApp(fake);
    expect(q<HTMLElement>(root, "main .placeholder").textContent).toContain("Select a session");
  });

  it("renders one card per candidate with score badges from the API", async () => {
    const fake = new FakeServer();
    const session = problemSession("s1");
    session.batches = 1;
    session.history = [
      makeCandidate("c001-00", "A tap that meters water per brushing.", makeScores({ novelty: 0.91, relevance: 0.42, composite: 0.665 })),
      makeCandidate("c001-01", "A basin that recycles rinse water.", makeScores({ novelty: 0.88, relevance: 0.3, composite: 0.59 })),
    ];
    fake.addSession(session);
    const { app, root } = await bootApp(fake);
    await app.selectSession("s1");

    const cards = qa<HTMLElement>(root, 'section[data-role="cards"] article.card');
    expect(cards).toHaveLength(2);
    expect(cards[0].dataset.candidateId).toBe("c001-00");
    expect(q<HTMLElement>(cards[0], ".card-text").textContent).toBe(
      "A tap that meters water per brushing.",
    );
    const novelty = q<HTMLElement>(cards[0], ".badge-novelty");
    expect(novelty.dataset.value).toBe("0.91");
    expect(novelty.textContent).toBe("novelty 0.910");
    expect(q<HTMLElement>(cards[0], ".badge-relevance").dataset.value).toBe("0.42");
    expect(q<HTMLElement>(cards[0], ".badge-composite").dataset.value).toBe("0.665");
  });

  it("collapses filtered-out candidates but keeps them inspectable", async () => {
    const fake = new FakeServer();
    const session = problemSession("s1");
    session.batches = 1;
    session.history = [
      makeCandidate("c001-00", "Fresh concept.", makeScores()),
      makeCandidate(
        "c001-01",
        "Too short.",
        makeScores({ novelty: 0.8, length_ok: false, composite: 0 }),
      ),
    ];
    fake.addSession(session);
    const { app, root } = await bootApp(fake);
    await app.selectSession("s1");

    const filtered = q<HTMLDetailsElement>(root, "details.card.filtered");
    expect(filtered.dataset.candidateId).toBe("c001-01");
    expect(filtered.open).toBe(false);
    expect(q<HTMLElement>(filtered, "summary").textContent).toContain("filtered out");
    expect(q<HTMLElement>(filtered, "summary").textContent).toContain("length");
    // The full card body is still there for inspection.
    expect(q<HTMLElement>(filtered, ".card-text").textContent).toBe("Too short.");
    expect(q<HTMLElement>(filtered, ".badge-composite").dataset.value).toBe("0");

    // The filter toggle hides gated cards entirely.
    const toggle = q<HTMLInputElement>(root, 'input[data-field="show-filtered"]');
    toggle.checked = false;
    toggle.dispatchEvent(new Event("change", { bubbles: true }));
    expect(root.querySelector("details.card.filtered")).toBeNull();
    expect(qa<HTMLElement>(root, 'section[data-role="cards"] .card')).toHaveLength(1);
  });

  it("grays a rejected card", async () => {
    const fake = new FakeServer();
    const session = problemSession("s1");
    session.batches = 1;
    session.history = [makeCandidate("c001-00", "Meh idea.", makeScores())];
    fake.addSession(session);
    const { app, root } = await bootApp(fake);
    await app.selectSession("s1");

    q<HTMLButtonElement>(root, 'article.card button[data-action="reject"]').click();
    await flush();

    const card = q<HTMLElement>(root, 'article.card[data-candidate-id="c001-00"]');
    expect(card.classList.contains("rejected")).toBe(true);
    expect(fake.sessions.get("s1")!.history[0].verdict).toBe("rejected");
  });

  it("disables the generate button while a batch is in flight", async () => {
    const fake = new FakeServer();
    fake.addSession(problemSession("s1"));
    const { app, root } = await bootApp(fake);
    await app.selectSession("s1");

    let release!: () => void;
    fake.generateGate = new Promise<void>((resolve) => {
      release = resolve;
    });

    q<HTMLButtonElement>(root, 'button[data-action="generate"]').click();
    await flush();
    const busy = q<HTMLButtonElement>(root, 'button[data-action="generate"]');
    expect(busy.disabled).toBe(true);
    expect(busy.textContent).toBe("Generating...");

    // A second click while in flight must not start another batch.
    busy.click();
    await flush();
    expect(fake.callsMatching("POST", /\/generate$/)).toHaveLength(1);

    release();
    await flush();
    const idle = q<HTMLButtonElement>(root, 'button[data-action="generate"]');
    expect(idle.disabled).toBe(false);
    expect(idle.textContent).toBe("Generate batch");
    expect(qa<HTMLElement>(root, 'section[data-role="cards"] article.card').length).toBeGreaterThan(0);
  });

  it("enforces one in-flight generate per session at the app level", async () => {
    const fake = new FakeServer();
    fake.addSession(problemSession("s1"));
    const { app } = await bootApp(fake);
    await app.selectSession("s1");

    let release!: () => void;
    fake.generateGate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const first = app.generateBatch(2);
    await flush();
    // Direct calls are ignored too, not just button clicks.
    await app.generateBatch(2);
    expect(fake.callsMatching("POST", /\/generate$/)).toHaveLength(1);
    release();
    await first;
  });

  it("polls the session once per second while a batch runs", async () => {
    vi.useFakeTimers();
    const fake = new FakeServer();
    fake.addSession(problemSession("s1"));
    const { app } = await bootApp(fake);
    await app.selectSession("s1");

    let release!: () => void;
    fake.generateGate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const running = app.generateBatch(1);
    await vi.advanceTimersByTimeAsync(0);

    const polls = () => fake.callsMatching("GET", /^\/sessions\/s1$/).length;
    const before = polls();
    await vi.advanceTimersByTimeAsync(1000);
    expect(polls()).toBe(before + 1);
    await vi.advanceTimersByTimeAsync(1000);
    expect(polls()).toBe(before + 2);

    release();
    await vi.advanceTimersByTimeAsync(0);
    await running;
    const settled = polls();
    await vi.advanceTimersByTimeAsync(3000);
    expect(polls()).toBe(settled);
  });

  it("honors a custom poll interval", async () => {
    vi.useFakeTimers();
    const fake = new FakeServer();
    fake.addSession(problemSession("s1"));
    const { app } = await bootApp(fake, { pollIntervalMs: 250 });
    await app.selectSession("s1");

    let release!: () => void;
    fake.generateGate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const running = app.generateBatch(1);
    await vi.advanceTimersByTimeAsync(0);
    const before = fake.callsMatching("GET", /^\/sessions\/s1$/).length;
    await vi.advanceTimersByTimeAsync(500);
    expect(fake.callsMatching("GET", /^\/sessions\/s1$/).length).toBe(before + 2);
    release();
    await vi.advanceTimersByTimeAsync(0);
    await running;
  });

  it("sorts cards by the API composite when asked", async () => {
    const fake = new FakeServer();
    const session = problemSession("s1");
    session.batches = 1;
    session.history = [
      makeCandidate("c001-00", "Low.", makeScores({ composite: 0.2 })),
      makeCandidate("c001-01", "High.", makeScores({ composite: 0.9 })),
      makeCandidate("c001-02", "Mid.", makeScores({ composite: 0.5 })),
    ];
    fake.addSession(session);
    const { app, root } = await bootApp(fake);
    await app.selectSession("s1");

    const order = () =>
      qa<HTMLElement>(root, 'section[data-role="cards"] .card').map((c) => c.dataset.candidateId);
    expect(order()).toEqual(["c001-00", "c001-01", "c001-02"]);

    selectOption(q<HTMLSelectElement>(root, 'select[data-field="sort"]'), "score");
    expect(order()).toEqual(["c001-01", "c001-02", "c001-00"]);
  });

  it("surfaces a backend failure from generate in the error box", async () => {
    const fake = new FakeServer();
    fake.addSession(problemSession("s1"));
    const { app, root } = await bootApp(fake);
    await app.selectSession("s1");

    fake.fetchOverride = async () => ({
      ok: false,
      status: 502,
      statusText: "Bad Gateway",
      json: async () => ({ detail: "backend exploded" }),
      text: async () => '{"detail":"backend exploded"}',
    });
    await app.generateBatch(1);
    expect(q<HTMLElement>(root, '[data-role="error"]').textContent).toContain("backend exploded");
    expect(q<HTMLButtonElement>(root, 'button[data-action="generate"]').disabled).toBe(false);
  });
});
