/*
 * Feed viewer controller: tab bar, Top window switch, category filter,
 * auto refresh. One FeedApp per page. All engine traffic is GET and
 * flows through api.ts; at most one fetch is in flight at any time,
 * a newer trigger aborts the older fetch.
 *
 * Refresh rules: the Live tab refetches on a timer, Top and Hot only on
 * activation. Repeated failure doubles the retry delay up to the 60s
 * cap on whatever tab is showing. Hiding the page pauses everything.
 */

import {
  CATEGORIES,
  Category,
  FeedQuery,
  Tab,
  TABS,
  TOP_WINDOWS,
  TopWindow,
  fetchFeed,
} from "./api.js";
import { Backoff } from "./backoff.js";
import { FeedViewState, emptyViewState, renderFeed } from "./view.js";

export interface AppConfig {
  apiBase: string;
  refreshSeconds: number;
}

export const MIN_REFRESH_SECONDS = 5;
export const DEFAULT_REFRESH_SECONDS = 10;

/* Config file knobs arrive untyped; clamp instead of trusting them. */
export function normalizeConfig(raw: unknown): AppConfig {
  const obj = (raw ?? {}) as Record<string, unknown>;
  const base = typeof obj.apiBase === "string" ? obj.apiBase : "";
  const seconds =
    typeof obj.refreshSeconds === "number" && Number.isFinite(obj.refreshSeconds)
      ? obj.refreshSeconds
      : DEFAULT_REFRESH_SECONDS;
  return {
    apiBase: base.replace(/\/+$/, ""),
    refreshSeconds: Math.max(MIN_REFRESH_SECONDS, seconds),
  };
}

/* Injectable timer pair so tests can drive time explicitly. */
export interface Scheduler {
  schedule(fn: () => void, delayMs: number): unknown;
  cancel(handle: unknown): void;
}

const realScheduler: Scheduler = {
  schedule: (fn, delayMs) => setTimeout(fn, delayMs),
  cancel: (handle) => clearTimeout(handle as ReturnType<typeof setTimeout>),
};

const TAB_LABELS: Record<Tab, string> = {
  live: "Live Stream",
  top: "Top",
  hot: "Hot",
};

export class FeedApp {
  tab: Tab = "live";
  topWindow: TopWindow = "1d";
  category: Category | null = null;

  private readonly states = new Map<Tab, FeedViewState>();
  private readonly backoff: Backoff;
  private readonly scheduler: Scheduler;
  private readonly doc: Document;

  private tabButtons = new Map<Tab, HTMLButtonElement>();
  private windowSelect!: HTMLSelectElement;
  private categorySelect!: HTMLSelectElement;
  private feedBox!: HTMLElement;

  private generation = 0;
  private inflight: AbortController | null = null;
  private inflightSettle: Promise<void> | null = null;
  private pendingTimer: unknown = null;
  private destroyed = false;
  private readonly onVisibility: () => void;

  constructor(
    private readonly root: HTMLElement,
    private readonly config: AppConfig,
    scheduler: Scheduler = realScheduler,
  ) {
    this.doc = root.ownerDocument;
    this.scheduler = scheduler;
    this.backoff = new Backoff(config.refreshSeconds);
    for (const tab of TABS) this.states.set(tab, emptyViewState());
    this.buildChrome();
    this.onVisibility = () => {
      if (this.doc.hidden) this.cancelPending();
      else this.scheduleNext();
    };
    this.doc.addEventListener("visibilitychange", this.onVisibility);
  }

  /* Activation fetch; resolves when the first attempt settles. */
  start(): Promise<void> {
    return this.trigger();
  }

  destroy(): void {
    this.destroyed = true;
    this.cancelPending();
    this.inflight?.abort();
    this.doc.removeEventListener("visibilitychange", this.onVisibility);
  }

  /* Resolves once no fetch is in flight. */
  idle(): Promise<void> {
    return this.inflightSettle ?? Promise.resolve();
  }

  selectTab(tab: Tab): Promise<void> {
    this.tab = tab;
    return this.trigger();
  }

  selectWindow(window: TopWindow): Promise<void> {
    this.topWindow = window;
    return this.trigger();
  }

  selectCategory(category: Category | null): Promise<void> {
    this.category = category;
    return this.trigger();
  }

  private state(): FeedViewState {
    return this.states.get(this.tab)!;
  }

  private query(): FeedQuery {
    const query: FeedQuery = {};
    if (this.tab === "top") query.window = this.topWindow;
    if (this.category !== null) query.category = this.category;
    return query;
  }

  /* Abort whatever is in flight and fetch the current selection. */
  private trigger(): Promise<void> {
    if (this.destroyed) return Promise.resolve();
    this.cancelPending();
    this.inflight?.abort();
    this.generation += 1;
    const gen = this.generation;
    const controller = new AbortController();
    this.inflight = controller;

    const state = this.state();
    state.loading = true;
    this.render();

    const settle = fetchFeed(this.config.apiBase, this.tab, this.query(), controller.signal)
      .then((feed) => {
        if (gen !== this.generation) return;
        state.items = feed.items;
        state.generatedAt = feed.generated_at;
        state.loaded = true;
        state.error = null;
        state.retryDelaySeconds = null;
        this.backoff.reset();
      })
      .catch((err: unknown) => {
        if (gen !== this.generation) return;
        if (err instanceof Error && err.name === "AbortError") return;
        this.backoff.recordFailure();
        state.error = err instanceof Error ? err.message : String(err);
        state.retryDelaySeconds = this.backoff.nextDelaySeconds();
      })
      .finally(() => {
        if (gen !== this.generation) return;
        state.loading = false;
        this.inflight = null;
        this.inflightSettle = null;
        this.render();
        this.scheduleNext();
      });
    this.inflightSettle = settle;
    return settle;
  }

  private cancelPending(): void {
    if (this.pendingTimer !== null) {
      this.scheduler.cancel(this.pendingTimer);
      this.pendingTimer = null;
    }
  }

  private scheduleNext(): void {
    this.cancelPending();
    if (this.destroyed || this.doc.hidden) return;
    const state = this.state();
    let delaySeconds: number | null = null;
    if (state.error !== null) {
      delaySeconds = this.backoff.nextDelaySeconds();
    } else if (this.tab === "live") {
      delaySeconds = this.config.refreshSeconds;
    }
    if (delaySeconds === null) return;
    this.pendingTimer = this.scheduler.schedule(() => {
      this.pendingTimer = null;
      void this.trigger();
    }, delaySeconds * 1000);
  }

  private buildChrome(): void {
    const doc = this.doc;
    this.root.replaceChildren();

    const nav = doc.createElement("nav");
    nav.className = "tabs";
    for (const tab of TABS) {
      const button = doc.createElement("button");
      button.type = "button";
      button.className = "tab";
      button.dataset.tab = tab;
      button.textContent = TAB_LABELS[tab];
      button.addEventListener("click", () => void this.selectTab(tab));
      nav.appendChild(button);
      this.tabButtons.set(tab, button);
    }
    this.root.appendChild(nav);

    const controls = doc.createElement("div");
    controls.className = "controls";

    this.windowSelect = doc.createElement("select");
    this.windowSelect.className = "window-select";
    for (const w of TOP_WINDOWS) {
      const option = doc.createElement("option");
      option.value = w;
      option.textContent = w;
      this.windowSelect.appendChild(option);
    }
    this.windowSelect.addEventListener("change", () => {
      void this.selectWindow(this.windowSelect.value as TopWindow);
    });
    controls.appendChild(this.windowSelect);

    this.categorySelect = doc.createElement("select");
    this.categorySelect.className = "category-select";
    const all = doc.createElement("option");
    all.value = "";
    all.textContent = "all categories";
    this.categorySelect.appendChild(all);
    for (const c of CATEGORIES) {
      const option = doc.createElement("option");
      option.value = c;
      option.textContent = c;
      this.categorySelect.appendChild(option);
    }
    this.categorySelect.addEventListener("change", () => {
      void this.selectCategory((this.categorySelect.value || null) as Category | null);
    });
    controls.appendChild(this.categorySelect);

    this.root.appendChild(controls);

    this.feedBox = doc.createElement("div");
    this.feedBox.className = "feed";
    // the retry button is re-created on every render; delegate its click
    this.feedBox.addEventListener("click", (event) => {
      const target = event.target as HTMLElement | null;
      if (target && target.closest(".retry")) void this.trigger();
    });
    this.root.appendChild(this.feedBox);

    this.render();
  }

  private render(): void {
    for (const [tab, button] of this.tabButtons) {
      button.classList.toggle("active", tab === this.tab);
    }
    this.windowSelect.hidden = this.tab !== "top";
    this.windowSelect.value = this.topWindow;
    renderFeed(this.feedBox, this.state());
  }
}
