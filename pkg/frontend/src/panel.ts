// Parameter panel: steppers and sliders bound to the decoding params, plus
// the preset dropdown. Edits land in a draft that is sent with the next
// batch; the session's own params change only when the server records them.

import { applyPreset, presetByName, PRESETS } from "./presets.js";
import { cloneParams } from "./state.js";
import type { DecodingParams, SessionView } from "./types.js";
import { validateParams } from "./validation.js";

export interface PanelHooks {
  onDraftChange(draft: DecodingParams): void;
}

type NumericField =
  | "max_tokens"
  | "temperature"
  | "top_k"
  | "top_p"
  | "presence_penalty"
  | "frequency_penalty"
  | "seed"
  | "n_candidates";

interface FieldSpec {
  field: NumericField;
  label: string;
  group: "content" | "randomness" | "repetition";
  step: number;
  slider?: { min: number; max: number; step: number };
}

// Grouped the way the knobs naturally split: what to say, how random,
// how repetitive.
const FIELD_SPECS: FieldSpec[] = [
  { field: "max_tokens", label: "Max tokens", group: "content", step: 1 },
  { field: "n_candidates", label: "Candidates per call", group: "content", step: 1 },
  { field: "seed", label: "Seed", group: "content", step: 1 },
  {
    field: "temperature",
    label: "Temperature",
    group: "randomness",
    step: 0.01,
    slider: { min: 0.02, max: 2, step: 0.01 },
  },
  { field: "top_k", label: "Top-k", group: "randomness", step: 1 },
  {
    field: "top_p",
    label: "Top-p",
    group: "randomness",
    step: 0.01,
    slider: { min: 0.01, max: 1, step: 0.01 },
  },
  {
    field: "presence_penalty",
    label: "Presence penalty",
    group: "repetition",
    step: 0.1,
    slider: { min: 0, max: 2, step: 0.05 },
  },
  {
    field: "frequency_penalty",
    label: "Frequency penalty",
    group: "repetition",
    step: 0.1,
    slider: { min: 0, max: 2, step: 0.05 },
  },
];

const GROUP_LEGENDS: Record<FieldSpec["group"], string> = {
  content: "Content and format",
  randomness: "Randomness",
  repetition: "Repetitiveness",
};

export class ParamsPanel {
  readonly root: HTMLElement;
  private hooks: PanelHooks;
  private session: SessionView | null = null;
  private draft: DecodingParams | null = null;
  private numbers = new Map<NumericField, HTMLInputElement>();
  private sliders = new Map<NumericField, HTMLInputElement>();
  private stopInput: HTMLInputElement;
  private presetSelect: HTMLSelectElement;
  private errorBox: HTMLElement;

  constructor(root: HTMLElement, hooks: PanelHooks) {
    this.root = root;
    this.hooks = hooks;
    root.classList.add("params-panel");

    const title = document.createElement("h2");
    title.textContent = "Parameters";
    root.appendChild(title);

    this.presetSelect = document.createElement("select");
    this.presetSelect.dataset.field = "preset";
    const placeholder = document.createElement("option");
    placeholder.value = "";
    placeholder.textContent = "Presets";
    this.presetSelect.appendChild(placeholder);
    for (const preset of PRESETS) {
      const option = document.createElement("option");
      option.value = preset.name;
      option.textContent = preset.name;
      this.presetSelect.appendChild(option);
    }
    this.presetSelect.addEventListener("change", () => this.onPresetPicked());
    const presetLabel = document.createElement("label");
    presetLabel.className = "preset-row";
    presetLabel.append("Preset ", this.presetSelect);
    root.appendChild(presetLabel);

    const groups = new Map<FieldSpec["group"], HTMLFieldSetElement>();
    for (const key of ["content", "randomness", "repetition"] as const) {
      const fieldset = document.createElement("fieldset");
      fieldset.dataset.group = key;
      const legend = document.createElement("legend");
      legend.textContent = GROUP_LEGENDS[key];
      fieldset.appendChild(legend);
      groups.set(key, fieldset);
      root.appendChild(fieldset);
    }

    for (const spec of FIELD_SPECS) {
      const row = document.createElement("label");
      row.className = "param-row";
      row.append(spec.label + " ");
      const number = document.createElement("input");
      number.type = "number";
      number.step = String(spec.step);
      number.dataset.field = spec.field;
      number.addEventListener("change", () => this.commitField(spec.field, number.value));
      this.numbers.set(spec.field, number);
      row.appendChild(number);
      if (spec.slider) {
        const slider = document.createElement("input");
        slider.type = "range";
        slider.min = String(spec.slider.min);
        slider.max = String(spec.slider.max);
        slider.step = String(spec.slider.step);
        slider.dataset.field = spec.field;
        slider.addEventListener("change", () => this.commitField(spec.field, slider.value));
        this.sliders.set(spec.field, slider);
        row.appendChild(slider);
      }
      groups.get(spec.group)!.appendChild(row);
    }

    this.stopInput = document.createElement("input");
    this.stopInput.type = "text";
    this.stopInput.dataset.field = "stop";
    this.stopInput.addEventListener("change", () => this.commitStop(this.stopInput.value));
    const stopRow = document.createElement("label");
    stopRow.className = "param-row";
    stopRow.append("Stop strings (JSON) ", this.stopInput);
    groups.get("content")!.appendChild(stopRow);

    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = "Changes apply to the next batch only.";
    root.appendChild(hint);

    this.errorBox = document.createElement("p");
    this.errorBox.className = "panel-errors";
    this.errorBox.dataset.role = "panel-errors";
    root.appendChild(this.errorBox);
  }

  render(session: SessionView, draft: DecodingParams): void {
    this.session = session;
    this.draft = cloneParams(draft);
    this.syncControls();
    // Top-k only steers the local sampler; remote backends reject it.
    const remote = session.backend.kind === "remote";
    const topK = this.numbers.get("top_k")!;
    topK.disabled = remote;
    topK.title = remote ? "Top-k applies to local sampling only" : "";
    this.presetSelect.value = "";
    this.errorBox.textContent = "";
  }

  /** Push the current draft values into every control. */
  private syncControls(): void {
    if (!this.draft) {
      return;
    }
    for (const spec of FIELD_SPECS) {
      const value = String(this.draft[spec.field]);
      this.numbers.get(spec.field)!.value = value;
      const slider = this.sliders.get(spec.field);
      if (slider) {
        slider.value = value;
      }
    }
    this.stopInput.value = JSON.stringify(this.draft.stop);
  }

  private onPresetPicked(): void {
    const preset = presetByName(this.presetSelect.value);
    if (!preset || !this.draft || !this.session) {
      return;
    }
    const next = applyPreset(this.draft, preset);
    this.commitDraft(next);
  }

  private commitField(field: NumericField, raw: string): void {
    if (!this.draft) {
      return;
    }
    const value = Number(raw);
    if (raw.trim() === "" || !Number.isFinite(value)) {
      this.fail([`${field} must be a number`]);
      return;
    }
    const next = cloneParams(this.draft);
    next[field] = value;
    this.commitDraft(next);
  }

  private commitStop(raw: string): void {
    if (!this.draft) {
      return;
    }
    let parsed: unknown;
    try {
      parsed = JSON.parse(raw || "[]");
    } catch {
      this.fail(["stop must be a JSON array of strings"]);
      return;
    }
    if (!Array.isArray(parsed) || parsed.some((s) => typeof s !== "string")) {
      this.fail(["stop must be a JSON array of strings"]);
      return;
    }
    const next = cloneParams(this.draft);
    next.stop = parsed as string[];
    this.commitDraft(next);
  }

  private commitDraft(next: DecodingParams): void {
    const errors = validateParams(next);
    if (errors.length > 0) {
      this.fail(errors);
      return;
    }
    this.draft = next;
    this.syncControls();
    this.errorBox.textContent = "";
    this.hooks.onDraftChange(cloneParams(next));
  }

  /** Show the problem and put the controls back to the last good draft. */
  private fail(errors: string[]): void {
    this.errorBox.textContent = errors.join("; ");
    this.syncControls();
  }
}
