// Studio application shell. Holds the one source of client state, wires the
// form, panel, and board together, and talks to the session API. All truth
// lives server-side: init() rebuilds everything from the endpoints, so a
// page reload lands in the same place.

import { ApiError, StudioApi } from "./api.js";
import { ConceptBoard } from "./board.js";
import { SessionForm } from "./forms.js";
import { ParamsPanel } from "./panel.js";
import { AppState, cloneParams, paramsEqual } from "./state.js";
import type { SortOrder } from "./state.js";
import type { CreateSessionRequest, Verdict } from "./types.js";

export interface AppOptions {
  /** How often to refresh the session while a batch is running. */
  pollIntervalMs?: number;
}

export class StudioApp {
  readonly state = new AppState();
  readonly root: HTMLElement;
  private api: StudioApi;
  private pollIntervalMs: number;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private board: ConceptBoard;
  private panel: ParamsPanel;
  private panelRoot: HTMLElement;
  private listRoot: HTMLElement;
  private errorBox: HTMLElement;
  private batchCount = 4;

  constructor(api: StudioApi, root: HTMLElement, options: AppOptions = {}) {
    this.api = api;
    this.root = root;
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;

    root.classList.add("studio");
    const header = document.createElement("header");
    const title = document.createElement("h1");
    title.textContent = "ideaforge studio";
    this.errorBox = document.createElement("p");
    this.errorBox.className = "error-box";
    this.errorBox.dataset.role = "error";
    header.append(title, this.errorBox);

    const columns = document.createElement("div");
    columns.className = "columns";
    const sidebar = document.createElement("aside");
    sidebar.className = "sidebar";
    const listSection = document.createElement("section");
    const listTitle = document.createElement("h2");
    listTitle.textContent = "Sessions";
    this.listRoot = document.createElement("ul");
    this.listRoot.dataset.role = "session-list";
    listSection.append(listTitle, this.listRoot);
    const formSection = document.createElement("section");
    const formTitle = document.createElement("h2");
    formTitle.textContent = "New session";
    const formRoot = document.createElement("div");
    formSection.append(formTitle, formRoot);
    sidebar.append(listSection, formSection);

    const boardRoot = document.createElement("main");
    this.panelRoot = document.createElement("aside");
    columns.append(sidebar, boardRoot, this.panelRoot);
    root.replaceChildren(header, columns);

    new SessionForm(formRoot, { onCreate: (req) => void this.createSession(req) });
    this.board = new ConceptBoard(boardRoot, {
      onGenerate: (count) => void this.generateBatch(count),
      onVerdict: (candidateId, verdict) => void this.recordVerdict(candidateId, verdict),
      onSortChange: (order) => this.setSortOrder(order),
      onShowFilteredChange: (show) => this.setShowFiltered(show),
      onBatchCountChange: (count) => {
        this.batchCount = count;
      },
    });
    this.panel = new ParamsPanel(this.panelRoot, {
      onDraftChange: (draft) => {
        this.state.draft = draft;
      },
    });
    this.panelRoot.hidden = true;
  }

  async init(): Promise<void> {
    await this.refreshSessions();
    const match = location.hash.match(/^#\/sessions\/(.+)$/);
    if (match) {
      try {
        await this.selectSession(decodeURIComponent(match[1]));
        return;
      } catch (err) {
        // A stale hash should not wedge startup.
        this.state.lastError = messageOf(err);
      }
    }
    this.renderAll();
  }

  dispose(): void {
    this.stopPolling();
  }

  async refreshSessions(): Promise<void> {
    this.state.sessions = await this.api.listSessions();
  }

  async selectSession(id: string): Promise<void> {
    const view = await this.api.getSession(id);
    this.state.selected = view;
    this.state.draft = cloneParams(view.params);
    this.state.lastError = "";
    location.hash = `#/sessions/${encodeURIComponent(id)}`;
    this.renderAll();
  }

  async createSession(req: CreateSessionRequest): Promise<void> {
    try {
      const view = await this.api.createSession(req);
      await this.refreshSessions();
      this.state.selected = view;
      this.state.draft = cloneParams(view.params);
      this.state.lastError = "";
      location.hash = `#/sessions/${encodeURIComponent(view.id)}`;
    } catch (err) {
      this.state.lastError = messageOf(err);
    }
    this.renderAll();
  }

  /** Kick off one batch; a session with a batch already running is left alone. */
  async generateBatch(count: number): Promise<void> {
    const session = this.state.selected;
    if (!session || this.state.inflight.has(session.id)) {
      return;
    }
    const draft = this.state.draft;
    const override = draft && !paramsEqual(draft, session.params) ? cloneParams(draft) : undefined;
    this.state.inflight.add(session.id);
    this.state.lastError = "";
    this.renderAll();
    this.startPolling(session.id);
    try {
      const result = await this.api.generate(session.id, count, override);
      this.state.selected = result.session;
      this.state.draft = cloneParams(result.session.params);
      await this.refreshSessions();
    } catch (err) {
      this.state.lastError = messageOf(err);
    } finally {
      this.state.inflight.delete(session.id);
      this.stopPolling();
      this.renderAll();
    }
  }

  async recordVerdict(candidateId: string, verdict: Verdict): Promise<void> {
    const session = this.state.selected;
    if (!session) {
      return;
    }
    const candidate = session.history.find((c) => c.id === candidateId);
    if (!candidate) {
      return;
    }
    // Optimistic flip, rolled back if the server disagrees.
    const previous = candidate.verdict;
    candidate.verdict = verdict;
    this.renderAll();
    try {
      const updated = await this.api.recordVerdict(session.id, candidateId, verdict);
      candidate.verdict = updated.verdict;
    } catch (err) {
      candidate.verdict = previous;
      this.state.lastError = messageOf(err);
    }
    this.renderAll();
  }

  setSortOrder(order: SortOrder): void {
    this.state.sortOrder = order;
    this.renderAll();
  }

  setShowFiltered(show: boolean): void {
    this.state.showFiltered = show;
    this.renderAll();
  }

  private startPolling(id: string): void {
    this.stopPolling();
    this.pollTimer = setInterval(() => {
      void this.pollOnce(id);
    }, this.pollIntervalMs);
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  private async pollOnce(id: string): Promise<void> {
    if (!this.state.inflight.has(id)) {
      return;
    }
    try {
      const view = await this.api.getSession(id);
      // Only apply if the batch is still running and the user has not
      // moved on; the generate response itself supersedes this.
      if (this.state.inflight.has(id) && this.state.selected?.id === id) {
        this.state.selected = view;
        this.renderAll();
      }
    } catch {
      // Transient poll failures are fine; the next tick tries again.
    }
  }

  renderAll(): void {
    this.renderSessionList();
    this.errorBox.textContent = this.state.lastError;
    const session = this.state.selected;
    if (!session) {
      this.board.renderEmpty();
      this.panelRoot.hidden = true;
      return;
    }
    this.board.render(session, {
      inflight: this.state.inflight.has(session.id),
      sortOrder: this.state.sortOrder,
      showFiltered: this.state.showFiltered,
      batchCount: this.batchCount,
    });
    this.panelRoot.hidden = false;
    this.panel.render(session, this.state.draft ?? cloneParams(session.params));
  }

  private renderSessionList(): void {
    this.listRoot.replaceChildren();
    for (const summary of this.state.sessions) {
      const item = document.createElement("li");
      const button = document.createElement("button");
      button.type = "button";
      button.dataset.sessionId = summary.id;
      button.textContent = `${summary.id} (${summary.mode === "problem_driven" ? "problem" : "analogy"}, ${summary.candidates} candidates)`;
      if (this.state.selected?.id === summary.id) {
        button.classList.add("selected");
      }
      button.addEventListener("click", () => void this.safeSelect(summary.id));
      item.appendChild(button);
      this.listRoot.appendChild(item);
    }
  }

  private async safeSelect(id: string): Promise<void> {
    try {
      await this.selectSession(id);
    } catch (err) {
      this.state.lastError = messageOf(err);
      this.renderAll();
    }
  }
}

function messageOf(err: unknown): string {
  if (err instanceof ApiError) {
    return `API error ${err.status}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}
