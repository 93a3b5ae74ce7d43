// Concept board: the generated candidates as cards with score badges and
// accept/reject controls, a shortlist of accepted ideas pinned on top, and
// the generate-batch button. Scores are shown exactly as the API reported
// them; the board never rescores anything.

import { isFilteredOut, sortCandidates } from "./state.js";
import type { Candidate, SessionView, Verdict } from "./types.js";
import type { SortOrder } from "./state.js";
import { isAnalogyInputs } from "./types.js";

export interface BoardUiState {
  inflight: boolean;
  sortOrder: SortOrder;
  showFiltered: boolean;
  batchCount: number;
}

export interface BoardHooks {
  onGenerate(count: number): void;
  onVerdict(candidateId: string, verdict: Verdict): void;
  onSortChange(order: SortOrder): void;
  onShowFilteredChange(show: boolean): void;
  onBatchCountChange(count: number): void;
}

export class ConceptBoard {
  readonly root: HTMLElement;
  private hooks: BoardHooks;

  constructor(root: HTMLElement, hooks: BoardHooks) {
    this.root = root;
    this.hooks = hooks;
    root.classList.add("concept-board");
  }

  render(session: SessionView, ui: BoardUiState): void {
    this.root.replaceChildren(
      this.sessionHeader(session),
      this.toolbar(ui),
      this.shortlist(session),
      this.cards(session, ui),
    );
  }

  renderEmpty(): void {
    const placeholder = document.createElement("p");
    placeholder.className = "placeholder";
    placeholder.textContent = "Select a session on the left or create a new one.";
    this.root.replaceChildren(placeholder);
  }

  private sessionHeader(session: SessionView): HTMLElement {
    const header = document.createElement("section");
    header.className = "session-header";

    const title = document.createElement("h2");
    title.textContent = session.id;
    header.appendChild(title);

    const tags = document.createElement("p");
    tags.className = "session-tags";
    const modeTag = document.createElement("span");
    modeTag.className = "tag";
    modeTag.textContent = session.mode === "problem_driven" ? "problem driven" : "analogy";
    const backendTag = document.createElement("span");
    backendTag.className = "tag";
    backendTag.dataset.role = "backend";
    backendTag.textContent =
      session.backend.kind === "remote"
        ? `remote: ${session.backend.model ?? "?"}`
        : `local: ${session.backend.model_path ?? "?"}`;
    const batchTag = document.createElement("span");
    batchTag.className = "tag";
    batchTag.textContent = `${session.batches} batches`;
    tags.append(modeTag, " ", backendTag, " ", batchTag);
    header.appendChild(tags);

    if (isAnalogyInputs(session.inputs)) {
      const query = document.createElement("p");
      query.className = "session-query";
      query.textContent = `Query: ${session.inputs.query_source} -> ${session.inputs.query_target}`;
      header.appendChild(query);
      const bankTitle = document.createElement("h3");
      bankTitle.textContent = "Example bank";
      header.appendChild(bankTitle);
      const bank = document.createElement("ol");
      bank.dataset.role = "bank";
      for (const row of session.inputs.examples) {
        const item = document.createElement("li");
        item.textContent = `${row.source_domain} -> ${row.target_domain}: ${row.description}`;
        bank.appendChild(item);
      }
      header.appendChild(bank);
    } else {
      const category = document.createElement("p");
      category.className = "session-query";
      category.textContent = `Category: ${session.inputs.category}`;
      const statement = document.createElement("p");
      statement.className = "session-problem";
      statement.textContent = session.inputs.problem_statement;
      header.append(category, statement);
    }
    return header;
  }

  private toolbar(ui: BoardUiState): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "board-toolbar";

    const generate = document.createElement("button");
    generate.type = "button";
    generate.dataset.action = "generate";
    generate.textContent = ui.inflight ? "Generating..." : "Generate batch";
    generate.disabled = ui.inflight;
    const count = document.createElement("input");
    count.type = "number";
    count.min = "1";
    count.step = "1";
    count.dataset.field = "batch-count";
    count.value = String(ui.batchCount);
    count.addEventListener("change", () => {
      const parsed = Number(count.value);
      if (Number.isInteger(parsed) && parsed >= 1) {
        this.hooks.onBatchCountChange(parsed);
      } else {
        count.value = String(ui.batchCount);
      }
    });
    generate.addEventListener("click", () => {
      this.hooks.onGenerate(Number(count.value));
    });
    const countLabel = document.createElement("label");
    countLabel.append("Count ", count);
    bar.append(generate, countLabel);

    const sort = document.createElement("select");
    sort.dataset.field = "sort";
    for (const [value, label] of [
      ["arrival", "Arrival order"],
      ["score", "By composite"],
    ] as const) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = label;
      sort.appendChild(option);
    }
    sort.value = ui.sortOrder;
    sort.addEventListener("change", () => {
      this.hooks.onSortChange(sort.value as SortOrder);
    });
    const sortLabel = document.createElement("label");
    sortLabel.append("Sort ", sort);
    bar.appendChild(sortLabel);

    const show = document.createElement("input");
    show.type = "checkbox";
    show.dataset.field = "show-filtered";
    show.checked = ui.showFiltered;
    show.addEventListener("change", () => {
      this.hooks.onShowFilteredChange(show.checked);
    });
    const showLabel = document.createElement("label");
    showLabel.append(show, " Show filtered");
    bar.appendChild(showLabel);

    return bar;
  }

  private shortlist(session: SessionView): HTMLElement {
    const section = document.createElement("section");
    section.dataset.role = "shortlist";
    const title = document.createElement("h3");
    title.textContent = "Shortlist";
    section.appendChild(title);
    const accepted = session.history.filter((c) => c.verdict === "accepted");
    if (accepted.length === 0) {
      const empty = document.createElement("p");
      empty.className = "hint";
      empty.textContent = "Accepted concepts land here.";
      section.appendChild(empty);
      return section;
    }
    const list = document.createElement("ul");
    for (const candidate of accepted) {
      const item = document.createElement("li");
      item.dataset.candidateId = candidate.id;
      const id = document.createElement("strong");
      id.textContent = candidate.id;
      const excerpt =
        candidate.text.length > 120 ? candidate.text.slice(0, 120) + "..." : candidate.text;
      item.append(id, " ", excerpt);
      list.appendChild(item);
    }
    section.appendChild(list);
    return section;
  }

  private cards(session: SessionView, ui: BoardUiState): HTMLElement {
    const section = document.createElement("section");
    section.dataset.role = "cards";
    if (session.history.length === 0) {
      const empty = document.createElement("p");
      empty.className = "placeholder";
      empty.textContent = "No candidates yet. Generate a batch.";
      section.appendChild(empty);
      return section;
    }
    for (const candidate of sortCandidates(session.history, ui.sortOrder)) {
      if (isFilteredOut(candidate)) {
        if (ui.showFiltered) {
          section.appendChild(this.filteredCard(candidate));
        }
        continue;
      }
      section.appendChild(this.card(candidate));
    }
    return section;
  }

  private card(candidate: Candidate): HTMLElement {
    const card = document.createElement("article");
    card.className = "card";
    if (candidate.verdict === "accepted") {
      card.classList.add("accepted");
    } else if (candidate.verdict === "rejected") {
      card.classList.add("rejected");
    }
    card.dataset.candidateId = candidate.id;
    card.append(this.cardHeader(candidate), this.badges(candidate), this.cardText(candidate));
    card.appendChild(this.verdictButtons(candidate));
    return card;
  }

  // Gated candidates stay inspectable but start collapsed.
  private filteredCard(candidate: Candidate): HTMLElement {
    const details = document.createElement("details");
    details.className = "card filtered";
    details.dataset.candidateId = candidate.id;
    const summary = document.createElement("summary");
    summary.textContent = `${candidate.id} filtered out (${this.flagWords(candidate).join(", ")})`;
    details.appendChild(summary);
    details.append(this.badges(candidate), this.cardText(candidate), this.verdictButtons(candidate));
    return details;
  }

  private cardHeader(candidate: Candidate): HTMLElement {
    const header = document.createElement("header");
    const id = document.createElement("span");
    id.className = "card-id";
    id.textContent = candidate.id;
    header.appendChild(id);
    return header;
  }

  private cardText(candidate: Candidate): HTMLElement {
    const text = document.createElement("p");
    text.className = "card-text";
    text.textContent = candidate.text;
    return text;
  }

  private flagWords(candidate: Candidate): string[] {
    const words: string[] = [];
    const scores = candidate.scores;
    if (!scores) {
      return ["unscored"];
    }
    if (scores.repetition_flag) {
      words.push("repeats");
    }
    if (!scores.length_ok) {
      words.push("length");
    }
    if (words.length === 0) {
      words.push("low novelty");
    }
    return words;
  }

  private badges(candidate: Candidate): HTMLElement {
    const row = document.createElement("div");
    row.className = "badges";
    const scores = candidate.scores;
    if (!scores) {
      const badge = document.createElement("span");
      badge.className = "badge";
      badge.textContent = "unscored";
      row.appendChild(badge);
      return row;
    }
    row.append(
      scoreBadge("novelty", scores.novelty),
      scoreBadge("relevance", scores.relevance),
      scoreBadge("composite", scores.composite),
    );
    if (scores.repetition_flag) {
      row.appendChild(flagBadge("repeats"));
    }
    if (!scores.length_ok) {
      row.appendChild(flagBadge("length"));
    }
    return row;
  }

  private verdictButtons(candidate: Candidate): HTMLElement {
    const footer = document.createElement("footer");
    footer.className = "card-actions";
    const accept = document.createElement("button");
    accept.type = "button";
    accept.dataset.action = "accept";
    accept.textContent = candidate.verdict === "accepted" ? "Accepted" : "Accept";
    accept.disabled = candidate.verdict === "accepted";
    accept.addEventListener("click", () => this.hooks.onVerdict(candidate.id, "accepted"));
    const reject = document.createElement("button");
    reject.type = "button";
    reject.dataset.action = "reject";
    reject.textContent = candidate.verdict === "rejected" ? "Rejected" : "Reject";
    reject.disabled = candidate.verdict === "rejected";
    reject.addEventListener("click", () => this.hooks.onVerdict(candidate.id, "rejected"));
    footer.append(accept, reject);
    return footer;
  }
}

function scoreBadge(label: string, value: number): HTMLElement {
  const span = document.createElement("span");
  span.className = `badge badge-${label}`;
  if (value < 0.1) {
    span.classList.add("low");
  } else if (value >= 0.7) {
    span.classList.add("high");
  }
  // data-value keeps the untouched API number; the text is just a short
  // rendering of that same number.
  span.dataset.value = String(value);
  span.title = `${label} ${value}`;
  span.textContent = `${label} ${value.toFixed(3)}`;
  return span;
}

function flagBadge(word: string): HTMLElement {
  const span = document.createElement("span");
  span.className = "badge flag";
  span.textContent = word;
  return span;
}
