import { describe, expect, it } from "vitest";
import { ViewGate, scrolledToEnd } from "../src/viewgate.js";

describe("scrolledToEnd", () => {
  it("accepts content shorter than the viewport", () => {
    expect(scrolledToEnd({ scrollTop: 0, viewportHeight: 800, contentHeight: 500 })).toBe(true);
  });

  it("requires reaching the bottom within 2% of content height", () => {
    // content 2000, viewport 800: bottom edge at scrollTop 1200, tolerance 40
    expect(scrolledToEnd({ scrollTop: 1200, viewportHeight: 800, contentHeight: 2000 })).toBe(true);
    expect(scrolledToEnd({ scrollTop: 1160, viewportHeight: 800, contentHeight: 2000 })).toBe(true);
    expect(scrolledToEnd({ scrollTop: 1159, viewportHeight: 800, contentHeight: 2000 })).toBe(
      false,
    );
    expect(scrolledToEnd({ scrollTop: 0, viewportHeight: 800, contentHeight: 2000 })).toBe(false);
  });

  it("honours a custom threshold", () => {
    const m = { scrollTop: 1100, viewportHeight: 800, contentHeight: 2000 };
    expect(scrolledToEnd(m, 0.05)).toBe(true);
    expect(scrolledToEnd(m, 0.02)).toBe(false);
  });
});

describe("ViewGate", () => {
  const tall = (scrollTop: number) => ({ scrollTop, viewportHeight: 800, contentHeight: 3000 });

  it("ignores scrolling outside fullscreen", () => {
    const gate = new ViewGate();
    gate.observeScroll(tall(2200));
    expect(gate.complete).toBe(false);
  });

  it("completes after fullscreen plus a scroll to the end", () => {
    const gate = new ViewGate();
    gate.enterFullscreen(tall(0));
    expect(gate.complete).toBe(false);
    gate.observeScroll(tall(1000));
    expect(gate.complete).toBe(false);
    gate.observeScroll(tall(2200));
    expect(gate.complete).toBe(true);
  });

  it("completes immediately for short content", () => {
    const gate = new ViewGate();
    gate.enterFullscreen({ scrollTop: 0, viewportHeight: 800, contentHeight: 400 });
    expect(gate.complete).toBe(true);
  });

  it("latches once complete, even after leaving fullscreen", () => {
    const gate = new ViewGate();
    gate.enterFullscreen(tall(0));
    gate.observeScroll(tall(2200));
    gate.exitFullscreen();
    expect(gate.complete).toBe(true);
    gate.observeScroll(tall(0));
    expect(gate.complete).toBe(true);
  });

  it("does not complete from a scroll after leaving fullscreen", () => {
    const gate = new ViewGate();
    gate.enterFullscreen(tall(0));
    gate.exitFullscreen();
    gate.observeScroll(tall(2200));
    expect(gate.complete).toBe(false);
  });

  it("reset clears the latch", () => {
    const gate = new ViewGate();
    gate.enterFullscreen(tall(2200));
    expect(gate.complete).toBe(true);
    gate.reset();
    expect(gate.complete).toBe(false);
  });
});
