/** Full-view gate: a side counts as viewed once its preview was opened in
 * fullscreen and scrolled to (within a tolerance of) the document end. */

export interface ScrollMetrics {
  scrollTop: number;
  viewportHeight: number;
  contentHeight: number;
}

/** True when the visible bottom edge is within `threshold` of the content
 * height from the end. Content shorter than the viewport counts as read. */
export function scrolledToEnd(metrics: ScrollMetrics, threshold = 0.02): boolean {
  const { scrollTop, viewportHeight, contentHeight } = metrics;
  if (contentHeight <= viewportHeight) return true;
  const remaining = contentHeight - (scrollTop + viewportHeight);
  return remaining <= threshold * contentHeight;
}

export class ViewGate {
  private fullscreen = false;
  private reachedEnd = false;

  constructor(private readonly threshold = 0.02) {}

  /** Callers must feed current metrics right after entering fullscreen so
   * short documents complete without a scroll event. */
  enterFullscreen(metrics?: ScrollMetrics): void {
    this.fullscreen = true;
    if (metrics) this.observeScroll(metrics);
  }

  exitFullscreen(): void {
    this.fullscreen = false;
  }

  observeScroll(metrics: ScrollMetrics): void {
    if (this.fullscreen && scrolledToEnd(metrics, this.threshold)) {
      this.reachedEnd = true;
    }
  }

  /** Completion latches: leaving fullscreen afterwards does not unview. */
  get complete(): boolean {
    return this.reachedEnd;
  }

  reset(): void {
    this.fullscreen = false;
    this.reachedEnd = false;
  }
}
