/*
 * Typed client for the engine's JSON feed API.
 *
 * Everything here is a plain GET; the frontend has no way to mutate
 * engine state. Query strings go through URLSearchParams so a missing
 * window/category never leaves a dangling "?".
 */

export type Tab = "live" | "top" | "hot";
export type TopWindow = "1d" | "7d" | "30d";
export type Category = "news" | "video" | "blog" | "other";

export const TABS: Tab[] = ["live", "top", "hot"];
export const TOP_WINDOWS: TopWindow[] = ["1d", "7d", "30d"];
export const CATEGORIES: Category[] = ["news", "video", "blog", "other"];

export interface Preview {
  title: string;
  language?: string;
}

export interface FeedItem {
  url: string;
  category: Category;
  n_views: number;
  t_first: number;
  /* hot items only */
  score?: number;
  preview?: Preview;
}

export interface FeedResponse {
  generated_at: number;
  tab: Tab;
  window: TopWindow | null;
  items: FeedItem[];
}

export interface FeedQuery {
  window?: TopWindow;
  category?: Category;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number | null = null) {
    super(message);
    this.name = "ApiError";
  }
}

export function feedUrl(apiBase: string, tab: Tab, query: FeedQuery = {}): string {
  const params = new URLSearchParams();
  if (query.window) params.set("window", query.window);
  if (query.category) params.set("category", query.category);
  const qs = params.toString();
  return `${apiBase}/api/feed/${tab}${qs ? "?" + qs : ""}`;
}

export async function fetchFeed(
  apiBase: string,
  tab: Tab,
  query: FeedQuery = {},
  signal?: AbortSignal,
): Promise<FeedResponse> {
  let response: Response;
  try {
    response = await fetch(feedUrl(apiBase, tab, query), { method: "GET", signal });
  } catch (err) {
    if (err instanceof Error && err.name === "AbortError") throw err;
    throw new ApiError(`feed API unreachable (${err})`);
  }
  if (!response.ok) {
    throw new ApiError(`feed API answered ${response.status}`, response.status);
  }
  return (await response.json()) as FeedResponse;
}
