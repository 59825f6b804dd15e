// Preview fetch coordination: debounce slider movement, never issue two
// fetches for the same (content, style, alpha) at once, and apply only the
// newest result however the responses race back.

export interface PreviewRequest {
  content: string;
  style: string;
  alpha: number;
}

export type Fetcher<T> = (content: string, style: string, alpha: number) => Promise<T>;

export function previewKey(req: PreviewRequest): string {
  return `${req.content}|${req.style}|${req.alpha}`;
}

export class PreviewController<T> {
  private seq = 0;
  private pending: PreviewRequest | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight = new Map<string, Promise<T>>();

  constructor(
    private readonly fetcher: Fetcher<T>,
    private readonly onResult: (payload: T, req: PreviewRequest) => void,
    private readonly onError: (message: string, req: PreviewRequest) => void,
    private readonly delayMs = 150,
  ) {}

  /** Queue a preview; rapid calls collapse into one fetch after the delay. */
  request(req: PreviewRequest): void {
    this.pending = req;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      if (this.pending) this.fire(this.pending);
    }, this.delayMs);
  }

  /** Skip the debounce delay (initial load, direct clicks). */
  requestNow(req: PreviewRequest): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = req;
    this.fire(req);
  }

  private fire(req: PreviewRequest): void {
    const mySeq = ++this.seq;
    const key = previewKey(req);
    let promise = this.inflight.get(key);
    if (!promise) {
      promise = this.fetcher(req.content, req.style, req.alpha);
      this.inflight.set(key, promise);
      promise.finally(() => this.inflight.delete(key)).catch(() => {});
    }
    promise.then(
      (payload) => {
        // A newer request exists: this response is stale, drop it.
        if (mySeq === this.seq) this.onResult(payload, req);
      },
      (err: unknown) => {
        if (mySeq === this.seq) {
          this.onError(err instanceof Error ? err.message : String(err), req);
        }
      },
    );
  }
}
