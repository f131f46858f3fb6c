/*
 * Fixture API server speaking the feed contract on an ephemeral
 * localhost port. Records every request it sees and can be switched
 * into failure modes so the error path is drivable from tests.
 */

import { IncomingMessage, Server, ServerResponse, createServer } from "node:http";
import { AddressInfo } from "node:net";

import type { FeedItem, FeedResponse, Tab, TopWindow } from "../src/api.js";

export interface RecordedRequest {
  method: string;
  path: string;
  query: Record<string, string>;
}

export function item(url: string, extra: Partial<FeedItem> = {}): FeedItem {
  return { url, category: "news", n_views: 7, t_first: 0, ...extra };
}

export class FixtureApi {
  readonly requests: RecordedRequest[] = [];
  /* answered for /api/feed/{tab}; top may vary by window */
  feeds: Partial<Record<Tab, FeedItem[]>> = {};
  topByWindow: Partial<Record<TopWindow, FeedItem[]>> = {};
  generatedAt = 1_000_000;
  /* failure modes */
  down = false;          // answer 503 like a replaying engine
  dropConnections = false; // destroy the socket instead of answering
  delayMs = 0;           // hold every response this long
  delayByTab: Partial<Record<Tab, number>> = {};

  private server: Server | null = null;
  apiBase = "";

  async start(): Promise<void> {
    this.server = createServer((req, res) => this.handle(req, res));
    await new Promise<void>((resolve) => {
      this.server!.listen(0, "127.0.0.1", resolve);
    });
    const address = this.server.address() as AddressInfo;
    this.apiBase = `http://127.0.0.1:${address.port}`;
  }

  async close(): Promise<void> {
    if (!this.server) return;
    const server = this.server;
    this.server = null;
    // keep-alive sockets from the client pool would stall close()
    server.closeAllConnections();
    await new Promise<void>((resolve) => server.close(() => resolve()));
  }

  requestsFor(tab: string): RecordedRequest[] {
    return this.requests.filter((r) => r.path === `/api/feed/${tab}`);
  }

  private handle(req: IncomingMessage, res: ServerResponse): void {
    const url = new URL(req.url ?? "/", this.apiBase);
    const query: Record<string, string> = {};
    url.searchParams.forEach((value, key) => {
      query[key] = value;
    });
    this.requests.push({ method: req.method ?? "", path: url.pathname, query });

    if (this.dropConnections) {
      res.destroy();
      return;
    }

    const feedMatch = url.pathname.match(/^\/api\/feed\/(live|top|hot)$/);
    const delay =
      (feedMatch ? this.delayByTab[feedMatch[1] as Tab] : undefined) ?? this.delayMs;
    res.on("error", () => {});
    const answer = (status: number, body: unknown) => {
      const send = () => {
        // an aborted client tears the socket down mid-delay
        if (res.destroyed || res.socket?.destroyed) return;
        res.writeHead(status, { "content-type": "application/json" });
        res.end(JSON.stringify(body));
      };
      if (delay > 0) setTimeout(send, delay);
      else send();
    };

    if (this.down) {
      answer(503, { detail: "engine is replaying its startup state" });
      return;
    }

    if (!feedMatch) {
      answer(404, { detail: "no such endpoint" });
      return;
    }
    const tab = feedMatch[1] as Tab;
    let items = this.feeds[tab] ?? [];
    if (tab === "top") {
      const window = (query.window ?? "1d") as TopWindow;
      items = this.topByWindow[window] ?? items;
    }
    if (query.category) {
      items = items.filter((i) => i.category === query.category);
    }
    const body: FeedResponse = {
      generated_at: this.generatedAt,
      tab,
      window: tab === "top" ? ((query.window ?? "1d") as TopWindow) : null,
      items,
    };
    answer(200, body);
  }
}
