/** Trailing-edge debounce; the last call within the window wins. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = undefined;
      fn(...args);
    }, waitMs);
  };
}

/**
 * Latest-wins gate for in-flight searches: starting a new request aborts
 * the previous one, and stale resolutions are dropped.
 */
export class LatestWins {
  private controller: AbortController | null = null;
  private ticket = 0;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T | undefined> {
    this.controller?.abort();
    this.controller = new AbortController();
    const myTicket = ++this.ticket;
    try {
      const value = await task(this.controller.signal);
      return myTicket === this.ticket ? value : undefined;
    } catch (err) {
      if (err instanceof DOMException && err.name === 'AbortError') return undefined;
      if (myTicket !== this.ticket) return undefined;
      throw err;
    }
  }
}
