/**
 * Debounced, sequence-numbered request scheduling. Every issue() call gets a
 * monotonically increasing sequence number; a response is delivered only if
 * no newer request has been issued since, so out-of-order replies from slow
 * slider positions can never overwrite fresher state.
 */
export class SequencedRequester<T> {
  private seq = 0;
  private delivered = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly debounceMs: number = 150,
  ) {}

  /** Schedule a request after the debounce window; stale replies are dropped. */
  issue(run: () => Promise<T>, deliver: (value: T) => void, onError?: (err: unknown) => void): number {
    const mySeq = ++this.seq;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      run().then(
        (value) => {
          if (mySeq > this.delivered && mySeq === this.seq) {
            this.delivered = mySeq;
            deliver(value);
          }
        },
        (err) => {
          if (mySeq === this.seq && onError) onError(err);
        },
      );
    }, this.debounceMs);
    return mySeq;
  }

  /** Immediate (non-debounced) issue, still sequence-checked. */
  issueNow(run: () => Promise<T>, deliver: (value: T) => void, onError?: (err: unknown) => void): number {
    const mySeq = ++this.seq;
    run().then(
      (value) => {
        if (mySeq > this.delivered && mySeq === this.seq) {
          this.delivered = mySeq;
          deliver(value);
        }
      },
      (err) => {
        if (mySeq === this.seq && onError) onError(err);
      },
    );
    return mySeq;
  }
}
