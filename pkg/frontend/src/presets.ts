// Shipped parameter presets for the panel dropdown.

import type { DecodingParams } from "./types.js";

export interface ParamPreset {
  name: string;
  values: Partial<DecodingParams>;
}

export const PRESETS: ParamPreset[] = [
  {
    name: "Problem-driven (paper)",
    values: { temperature: 0.85, top_k: 40, top_p: 1 },
  },
  {
    name: "Analogy (paper)",
    values: { temperature: 0.85, top_p: 1, presence_penalty: 0.5, frequency_penalty: 0.5 },
  },
];

export function presetByName(name: string): ParamPreset | undefined {
  return PRESETS.find((p) => p.name === name);
}

/** Overlay a preset on existing params, leaving unmentioned fields alone. */
export function applyPreset(base: DecodingParams, preset: ParamPreset): DecodingParams {
  const merged: DecodingParams = { ...base, ...preset.values };
  merged.stop = [...(preset.values.stop ?? base.stop)];
  return merged;
}
