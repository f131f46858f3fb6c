/*
 * Refresh delay under failure: doubles from the base interval on each
 * consecutive failure, capped at 60s, reset by the first success.
 */

export const MAX_BACKOFF_SECONDS = 60;

export class Backoff {
  private failures = 0;

  constructor(readonly baseSeconds: number) {}

  /* Seconds to wait before the next attempt. The first failure retries
   * at the base interval; each repeat doubles it. */
  nextDelaySeconds(): number {
    if (this.failures === 0) return this.baseSeconds;
    const doubled = this.baseSeconds * Math.pow(2, this.failures - 1);
    return Math.min(MAX_BACKOFF_SECONDS, doubled);
  }

  recordFailure(): void {
    this.failures += 1;
  }

  reset(): void {
    this.failures = 0;
  }

  get failureCount(): number {
    return this.failures;
  }
}
