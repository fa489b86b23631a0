/** DOM wiring: renders the screen for the current ViewState and drives
 * transitions from service responses. All state lives in one ViewState value;
 * every handler replaces it and re-renders. */

import { ApiError, ArenaClient } from "./api.js";
import {
  ViewState,
  canVote,
  initialState,
  markViewed,
  matchLoaded,
  onboarded,
  quotaRefused,
  sessionStarted,
  slotFailed,
  slotRetried,
  voteRecorded,
} from "./state.js";
import { ViewGate } from "./viewgate.js";
import type { Side } from "./types.js";

const ROLES = ["Designer", "WebDeveloper", "Researcher", "Other"];

export class App {
  private state: ViewState = initialState();
  private gates: Record<Side, ViewGate> = { left: new ViewGate(), right: new ViewGate() };
  private matchShownAt = 0;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ArenaClient,
  ) {}

  start(): void {
    this.render();
  }

  private set(next: ViewState): void {
    this.state = next;
    this.render();
  }

  private async loadMatch(): Promise<void> {
    try {
      const card = await this.client.getMatch();
      this.gates.left.reset();
      this.gates.right.reset();
      this.matchShownAt = Date.now();
      this.set(matchLoaded(this.state, card));
    } catch (err) {
      if (err instanceof ApiError && err.problem.code === "vote_quota_exhausted") {
        this.set(quotaRefused(this.state));
        return;
      }
      if (err instanceof ApiError && err.problem.code === "session_closed") {
        const info = await this.client.startSession();
        this.set(sessionStarted(this.state, info));
        await this.loadMatch();
        return;
      }
      throw err;
    }
  }

  private async submitVote(side: Side): Promise<void> {
    const match = this.state.match;
    if (!match || !canVote(this.state)) return;
    const latency = Math.max(0, Math.round(Date.now() - this.matchShownAt));
    try {
      const receipt = await this.client.vote(match.match_id, side, true, latency);
      this.set(voteRecorded(this.state, receipt));
      if (this.state.screen === "comparison") await this.loadMatch();
    } catch (err) {
      if (err instanceof ApiError && err.problem.code === "vote_quota_exhausted") {
        this.set(quotaRefused(this.state));
        return;
      }
      throw err;
    }
  }

  private render(): void {
    this.root.replaceChildren();
    switch (this.state.screen) {
      case "onboarding":
        this.renderOnboarding();
        break;
      case "session_intro":
        this.renderSessionIntro();
        break;
      case "comparison":
        this.renderComparison();
        break;
      case "session_complete":
        this.renderSessionComplete();
        break;
      case "done":
        this.renderDone();
        break;
    }
  }

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
  }

  private renderOnboarding(): void {
    const form = this.el("form", "onboarding");
    form.append(this.el("h1", undefined, "Expert onboarding"));
    const fields: Array<[string, string]> = [
      ["access_code", "Access code"],
      ["first_name", "First name"],
      ["last_name", "Last name"],
    ];
    for (const [name, label] of fields) {
      const wrap = this.el("label", "field", label);
      const input = this.el("input");
      input.name = name;
      input.required = true;
      wrap.append(input);
      form.append(wrap);
    }
    const roleWrap = this.el("fieldset", "roles");
    roleWrap.append(this.el("legend", undefined, "Roles"));
    for (const role of ROLES) {
      const label = this.el("label", undefined, role);
      const box = this.el("input");
      box.type = "checkbox";
      box.name = "roles";
      box.value = role;
      label.prepend(box);
      roleWrap.append(label);
    }
    form.append(roleWrap);
    const usedBefore = this.el("label", "field", "I have used AI site builders before");
    const usedBox = this.el("input");
    usedBox.type = "checkbox";
    usedBox.name = "used_ai_tools_before";
    usedBefore.prepend(usedBox);
    form.append(usedBefore);

    const error = this.el("p", "error");
    const submit = this.el("button", undefined, "Begin");
    submit.type = "submit";
    form.append(error, submit);

    form.addEventListener("submit", async (evt) => {
      evt.preventDefault();
      const data = new FormData(form);
      try {
        const out = await this.client.onboard({
          access_code: String(data.get("access_code") ?? ""),
          first_name: String(data.get("first_name") ?? ""),
          last_name: String(data.get("last_name") ?? ""),
          roles: data.getAll("roles").map(String),
          used_ai_tools_before: usedBox.checked,
        });
        this.set(onboarded(this.state, out));
      } catch (err) {
        error.textContent = err instanceof ApiError ? err.problem.detail : String(err);
      }
    });
    this.root.append(form);
  }

  private renderSessionIntro(): void {
    const pane = this.el("section", "session-intro");
    pane.append(this.el("h1", undefined, `Session ${this.state.sessionIndex}`));
    pane.append(
      this.el(
        "p",
        undefined,
        "You will compare pairs of projects side by side. View each one in " +
          "fullscreen and scroll to the end before voting.",
      ),
    );
    const go = this.el("button", undefined, "Start session");
    go.addEventListener("click", async () => {
      const info = await this.client.startSession();
      this.set(sessionStarted(this.state, info));
      await this.loadMatch();
    });
    pane.append(go);
    this.root.append(pane);
  }

  private renderComparison(): void {
    const match = this.state.match;
    const pane = this.el("section", "comparison");
    pane.append(this.el("p", "progress", `${this.state.votesInSession} / 30`));
    if (!match) {
      pane.append(this.el("p", undefined, "Loading the next comparison…"));
      this.root.append(pane);
      void this.loadMatch();
      return;
    }
    pane.append(this.el("h1", "instruction", match.instruction));
    const brief = this.el("details", "brief");
    brief.append(this.el("summary", undefined, match.prompt.title));
    brief.append(this.el("p", undefined, match.prompt.goal));
    brief.append(this.el("p", undefined, match.prompt.scenario));
    pane.append(brief);

    const row = this.el("div", "slots");
    row.append(this.renderSlot("left"), this.renderSlot("right"));
    pane.append(row);
    this.root.append(pane);
  }

  private renderSlot(side: Side): HTMLElement {
    const match = this.state.match;
    if (!match) throw new Error("slot rendered without a match");
    const slot = side === "left" ? match.left : match.right;
    const cell = this.el("div", `slot slot-${side}`);
    cell.append(this.el("h2", undefined, side === "left" ? "Left" : "Right"));

    if (this.state.slotError[side]) {
      const card = this.el("div", "load-error");
      card.append(this.el("p", undefined, "This preview failed to load."));
      const retry = this.el("button", undefined, "Retry");
      retry.addEventListener("click", () => this.set(slotRetried(this.state, side)));
      card.append(retry);
      cell.append(card);
      return cell;
    }

    const frame = this.el("iframe", "preview");
    frame.src = slot.artifact_ref;
    frame.addEventListener("error", () => this.set(slotFailed(this.state, side)));
    frame.addEventListener("load", () => {
      const doc = frame.contentDocument;
      if (!doc) {
        this.set(slotFailed(this.state, side));
        return;
      }
      const metrics = () => ({
        scrollTop: doc.documentElement.scrollTop,
        viewportHeight: doc.documentElement.clientHeight,
        contentHeight: doc.documentElement.scrollHeight,
      });
      doc.addEventListener("scroll", () => {
        this.gates[side].observeScroll(metrics());
        this.syncGate(side);
      });
      frame.addEventListener("fullscreenchange", () => {
        if (document.fullscreenElement === frame) {
          this.gates[side].enterFullscreen(metrics());
        } else {
          this.gates[side].exitFullscreen();
        }
        this.syncGate(side);
      });
    });
    cell.append(frame);

    const fullview = this.el("button", "fullscreen", "View fullscreen");
    fullview.addEventListener("click", () => void frame.requestFullscreen());
    cell.append(fullview);

    const vote = this.el("button", "vote", "Vote for this Project");
    vote.disabled = !canVote(this.state);
    vote.addEventListener("click", () => void this.submitVote(side));
    cell.append(vote);
    return cell;
  }

  private syncGate(side: Side): void {
    if (this.gates[side].complete && this.state.match) {
      const already = side === "left" ? this.state.viewedLeft : this.state.viewedRight;
      if (!already) this.set(markViewed(this.state, side));
    }
  }

  private renderSessionComplete(): void {
    const pane = this.el("section", "session-complete");
    pane.append(this.el("h1", undefined, `Session ${this.state.sessionIndex} complete`));
    if (this.state.breakGuidance) {
      pane.append(this.el("p", "break", this.state.breakGuidance));
    }
    if (this.state.voteCount < this.state.lifetimeQuota) {
      const next = this.el("button", undefined, "Start next session");
      next.addEventListener("click", async () => {
        const info = await this.client.startSession();
        this.set(sessionStarted(this.state, info));
        await this.loadMatch();
      });
      pane.append(next);
    }
    this.root.append(pane);
  }

  private renderDone(): void {
    const pane = this.el("section", "done");
    pane.append(this.el("h1", undefined, "All done"));
    pane.append(
      this.el("p", undefined, `Thank you. You cast ${this.state.voteCount} votes in total.`),
    );
    this.root.append(pane);
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const app = new App(root, new ArenaClient(""));
  app.start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount();
}
