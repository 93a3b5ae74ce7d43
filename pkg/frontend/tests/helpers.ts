// Shared DOM and async helpers for the studio tests.

import { StudioApi } from "../src/api.js";
import { StudioApp } from "../src/app.js";
import type { AppOptions } from "../src/app.js";
import type { FakeServer } from "./fake-server.js";

/** Drain pending microtasks so awaited fetch chains settle. */
export async function flush(turns = 50): Promise<void> {
  for (let i = 0; i < turns; i++) {
    await Promise.resolve();
  }
}

export function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

export function resetDom(): void {
  document.body.innerHTML = "";
  location.hash = "";
}

export async function bootApp(
  fake: FakeServer,
  options: AppOptions = {},
): Promise<{ app: StudioApp; root: HTMLElement }> {
  const root = mount();
  const app = new StudioApp(new StudioApi("", fake.fetch), root, options);
  await app.init();
  await flush();
  return { app, root };
}

export function q<T extends Element>(root: ParentNode, selector: string): T {
  const el = root.querySelector(selector);
  if (!el) {
    throw new Error(`no element matches ${selector}`);
  }
  return el as T;
}

export function qa<T extends Element>(root: ParentNode, selector: string): T[] {
  return [...root.querySelectorAll(selector)] as T[];
}

export function setValue(input: HTMLInputElement | HTMLTextAreaElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("change", { bubbles: true }));
}

export function selectOption(select: HTMLSelectElement, value: string): void {
  select.value = value;
  select.dispatchEvent(new Event("change", { bubbles: true }));
}
