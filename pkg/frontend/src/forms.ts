// New-session form: mode picker, the per-mode input fields, example-bank
// selector, and backend choice. Validation mirrors the server rules so an
// obviously bad request never leaves the browser.

import type { BankRow, CreateSessionRequest, Mode } from "./types.js";
import { validateCreateRequest } from "./validation.js";

export interface FormHooks {
  onCreate(req: CreateSessionRequest): void;
}

export class SessionForm {
  readonly root: HTMLElement;
  private hooks: FormHooks;
  private modeSelect: HTMLSelectElement;
  private problemBlock: HTMLElement;
  private analogyBlock: HTMLElement;
  private category: HTMLInputElement;
  private problemStatement: HTMLTextAreaElement;
  private querySource: HTMLInputElement;
  private queryTarget: HTMLInputElement;
  private bankSelect: HTMLSelectElement;
  private examples: HTMLTextAreaElement;
  private backendSelect: HTMLSelectElement;
  private modelPath: HTMLInputElement;
  private baseUrl: HTMLInputElement;
  private remoteModel: HTMLInputElement;
  private sessionId: HTMLInputElement;
  private errorBox: HTMLElement;

  constructor(root: HTMLElement, hooks: FormHooks) {
    this.root = root;
    this.hooks = hooks;
    root.classList.add("session-form");

    this.modeSelect = document.createElement("select");
    this.modeSelect.dataset.field = "mode";
    for (const [value, label] of [
      ["problem_driven", "Problem driven"],
      ["analogy", "Analogy"],
    ] as const) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = label;
      this.modeSelect.appendChild(option);
    }
    this.modeSelect.addEventListener("change", () => this.syncVisibility());
    root.appendChild(labelled("Mode ", this.modeSelect));

    this.problemBlock = document.createElement("div");
    this.problemBlock.dataset.role = "problem-inputs";
    this.category = document.createElement("input");
    this.category.type = "text";
    this.category.dataset.field = "category";
    this.problemBlock.appendChild(labelled("Category ", this.category));
    this.problemStatement = document.createElement("textarea");
    this.problemStatement.dataset.field = "problem_statement";
    this.problemStatement.rows = 3;
    this.problemBlock.appendChild(labelled("Problem statement ", this.problemStatement));
    root.appendChild(this.problemBlock);

    this.analogyBlock = document.createElement("div");
    this.analogyBlock.dataset.role = "analogy-inputs";
    this.querySource = document.createElement("input");
    this.querySource.type = "text";
    this.querySource.dataset.field = "query_source";
    this.analogyBlock.appendChild(labelled("Source domain ", this.querySource));
    this.queryTarget = document.createElement("input");
    this.queryTarget.type = "text";
    this.queryTarget.dataset.field = "query_target";
    this.analogyBlock.appendChild(labelled("Target domain ", this.queryTarget));
    this.bankSelect = document.createElement("select");
    this.bankSelect.dataset.field = "bank";
    for (const [value, label] of [
      ["bundled", "Bundled example bank"],
      ["custom", "Custom rows (JSON)"],
    ] as const) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = label;
      this.bankSelect.appendChild(option);
    }
    this.bankSelect.addEventListener("change", () => this.syncVisibility());
    this.analogyBlock.appendChild(labelled("Example bank ", this.bankSelect));
    this.examples = document.createElement("textarea");
    this.examples.dataset.field = "examples";
    this.examples.rows = 4;
    this.examples.placeholder = '[{"source_domain": "...", "target_domain": "...", "description": "..."}]';
    this.analogyBlock.appendChild(labelled("Bank rows ", this.examples));
    root.appendChild(this.analogyBlock);

    this.backendSelect = document.createElement("select");
    this.backendSelect.dataset.field = "backend";
    for (const [value, label] of [
      ["default", "Server default backend"],
      ["local", "Local model file"],
      ["remote", "Remote completions API"],
    ] as const) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = label;
      this.backendSelect.appendChild(option);
    }
    this.backendSelect.addEventListener("change", () => this.syncVisibility());
    root.appendChild(labelled("Backend ", this.backendSelect));
    this.modelPath = document.createElement("input");
    this.modelPath.type = "text";
    this.modelPath.dataset.field = "model_path";
    root.appendChild(labelled("Model path ", this.modelPath));
    this.baseUrl = document.createElement("input");
    this.baseUrl.type = "text";
    this.baseUrl.dataset.field = "base_url";
    root.appendChild(labelled("Base URL ", this.baseUrl));
    this.remoteModel = document.createElement("input");
    this.remoteModel.type = "text";
    this.remoteModel.dataset.field = "model";
    root.appendChild(labelled("Model name ", this.remoteModel));

    this.sessionId = document.createElement("input");
    this.sessionId.type = "text";
    this.sessionId.dataset.field = "session-id";
    this.sessionId.placeholder = "optional";
    root.appendChild(labelled("Session id ", this.sessionId));

    const submit = document.createElement("button");
    submit.type = "button";
    submit.dataset.action = "create";
    submit.textContent = "Create session";
    submit.addEventListener("click", () => this.submit());
    root.appendChild(submit);

    this.errorBox = document.createElement("p");
    this.errorBox.className = "form-errors";
    this.errorBox.dataset.role = "form-errors";
    root.appendChild(this.errorBox);

    this.syncVisibility();
  }

  private mode(): Mode {
    return this.modeSelect.value as Mode;
  }

  private syncVisibility(): void {
    const analogy = this.mode() === "analogy";
    this.problemBlock.hidden = analogy;
    this.analogyBlock.hidden = !analogy;
    this.examples.parentElement!.hidden = !analogy || this.bankSelect.value !== "custom";
    const backend = this.backendSelect.value;
    this.modelPath.parentElement!.hidden = backend !== "local";
    this.baseUrl.parentElement!.hidden = backend !== "remote";
    this.remoteModel.parentElement!.hidden = backend !== "remote";
  }

  private submit(): void {
    let req: CreateSessionRequest;
    try {
      req = this.buildRequest();
    } catch (err) {
      this.errorBox.textContent = err instanceof Error ? err.message : String(err);
      return;
    }
    const errors = validateCreateRequest(req);
    if (errors.length > 0) {
      this.errorBox.textContent = errors.join("; ");
      return;
    }
    this.errorBox.textContent = "";
    this.hooks.onCreate(req);
  }

  private buildRequest(): CreateSessionRequest {
    const req: CreateSessionRequest =
      this.mode() === "problem_driven"
        ? {
            mode: "problem_driven",
            inputs: {
              category: this.category.value.trim(),
              problem_statement: this.problemStatement.value.trim(),
            },
          }
        : {
            mode: "analogy",
            inputs: {
              query_source: this.querySource.value.trim(),
              query_target: this.queryTarget.value.trim(),
              ...(this.bankSelect.value === "custom"
                ? { examples: this.parseExamples() }
                : {}),
            },
          };
    const backend = this.backendSelect.value;
    if (backend === "local") {
      req.backend = { kind: "local", model_path: this.modelPath.value.trim() };
    } else if (backend === "remote") {
      req.backend = {
        kind: "remote",
        base_url: this.baseUrl.value.trim(),
        model: this.remoteModel.value.trim(),
      };
    }
    const id = this.sessionId.value.trim();
    if (id) {
      req.id = id;
    }
    return req;
  }

  private parseExamples(): BankRow[] {
    let parsed: unknown;
    try {
      parsed = JSON.parse(this.examples.value);
    } catch {
      throw new Error("bank rows must be valid JSON");
    }
    if (!Array.isArray(parsed) || parsed.length === 0) {
      throw new Error("bank rows must be a nonempty JSON array");
    }
    for (const row of parsed) {
      for (const key of ["source_domain", "target_domain", "description"]) {
        if (typeof (row as Record<string, unknown>)[key] !== "string") {
          throw new Error(`every bank row needs a string ${key}`);
        }
      }
    }
    return parsed as BankRow[];
  }
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  const label = document.createElement("label");
  label.className = "form-row";
  label.append(text, control);
  return label;
}
