/*
 * Browser entry point: load config.json next to the page, mount the
 * app on #app. Kept separate from app.ts so tests can construct
 * FeedApp directly without a page-level boot.
 */

import { FeedApp, normalizeConfig } from "./app.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  let raw: unknown = {};
  try {
    const response = await fetch("./config.json", { method: "GET" });
    if (response.ok) raw = await response.json();
  } catch {
    // fall through to defaults; the error state will say the API is down
  }
  const app = new FeedApp(root, normalizeConfig(raw));
  void app.start();
}

void boot();
