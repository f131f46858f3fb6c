/*
 * DOM rendering for the feed area. Pure state -> elements; the caller
 * owns the container. Items render in exactly the order the API
 * returned them, nothing here sorts or filters.
 */

import { FeedItem } from "./api.js";

export interface FeedViewState {
  items: FeedItem[];
  generatedAt: number | null;
  /* non-null renders the retriable error banner */
  error: string | null;
  retryDelaySeconds: number | null;
  /* false until the first successful fetch */
  loaded: boolean;
  loading: boolean;
}

export function emptyViewState(): FeedViewState {
  return {
    items: [],
    generatedAt: null,
    error: null,
    retryDelaySeconds: null,
    loaded: false,
    loading: false,
  };
}

function outboundHref(url: string): string {
  // engine URL keys are canonical renders without a scheme
  return /^https?:\/\//.test(url) ? url : `http://${url}`;
}

function ageLabel(tFirst: number, generatedAt: number | null): string {
  if (generatedAt === null) return "";
  const age = Math.max(0, generatedAt - tFirst);
  if (age < 3600) return `${Math.floor(age / 60)}m`;
  if (age < 86400) return `${Math.floor(age / 3600)}h`;
  return `${Math.floor(age / 86400)}d`;
}

function itemCard(doc: Document, item: FeedItem, generatedAt: number | null): HTMLElement {
  const card = doc.createElement("article");
  card.className = "card";

  const link = doc.createElement("a");
  link.className = "item-link";
  link.href = outboundHref(item.url);
  link.target = "_blank";
  // defense in depth: never hand the promoted site our path as referer
  link.rel = "noopener noreferrer";
  link.referrerPolicy = "no-referrer";
  link.textContent = item.preview?.title || item.url;
  card.appendChild(link);

  const meta = doc.createElement("div");
  meta.className = "item-meta";

  const badge = doc.createElement("span");
  badge.className = `badge badge-${item.category}`;
  badge.textContent = item.category;
  meta.appendChild(badge);

  const views = doc.createElement("span");
  views.className = "views";
  views.textContent = `${item.n_views} viewers`;
  meta.appendChild(views);

  if (item.score !== undefined) {
    const score = doc.createElement("span");
    score.className = "score";
    score.textContent = `score ${item.score.toFixed(2)}`;
    meta.appendChild(score);
  }

  const age = ageLabel(item.t_first, generatedAt);
  if (age) {
    const when = doc.createElement("span");
    when.className = "age";
    when.textContent = age;
    meta.appendChild(when);
  }

  card.appendChild(meta);
  return card;
}

export function renderFeed(container: HTMLElement, state: FeedViewState): void {
  const doc = container.ownerDocument;
  container.replaceChildren();

  if (state.error !== null) {
    const banner = doc.createElement("div");
    banner.className = "error-banner";
    const text = doc.createElement("span");
    text.textContent =
      state.retryDelaySeconds !== null
        ? `${state.error}; retrying in ${state.retryDelaySeconds}s`
        : state.error;
    banner.appendChild(text);
    const retry = doc.createElement("button");
    retry.className = "retry";
    retry.type = "button";
    retry.textContent = "retry now";
    banner.appendChild(retry);
    container.appendChild(banner);
  }

  if (state.items.length > 0) {
    const list = doc.createElement("div");
    list.className = "cards";
    for (const item of state.items) {
      list.appendChild(itemCard(doc, item, state.generatedAt));
    }
    container.appendChild(list);
  } else {
    const placeholder = doc.createElement("div");
    if (state.loaded) {
      placeholder.className = "empty";
      placeholder.textContent = "no items yet";
    } else if (state.error !== null) {
      placeholder.className = "unavailable";
      placeholder.textContent = "feed unavailable";
    } else {
      placeholder.className = "loading";
      placeholder.textContent = state.loading ? "loading" : "";
    }
    container.appendChild(placeholder);
  }
}
