import type { MatchCard, OnboardResponse, SessionInfo, Side, VoteReceipt } from "./types.js";

export type Screen =
  | "onboarding"
  | "session_intro"
  | "comparison"
  | "session_complete"
  | "done";

export interface ViewState {
  screen: Screen;
  match: MatchCard | null;
  viewedLeft: boolean;
  viewedRight: boolean;
  votesInSession: number;
  sessionIndex: number;
  voteCount: number;
  lifetimeQuota: number;
  breakGuidance: string | null;
  slotError: { left: boolean; right: boolean };
}

export function initialState(): ViewState {
  return {
    screen: "onboarding",
    match: null,
    viewedLeft: false,
    viewedRight: false,
    votesInSession: 0,
    sessionIndex: 1,
    voteCount: 0,
    lifetimeQuota: 90,
    breakGuidance: null,
    slotError: { left: false, right: false },
  };
}

/** Both sides fully viewed; the only path that unlocks the vote buttons. */
export function canVote(state: ViewState): boolean {
  return (
    state.screen === "comparison" &&
    state.match !== null &&
    state.viewedLeft &&
    state.viewedRight
  );
}

export function onboarded(state: ViewState, out: OnboardResponse): ViewState {
  if (out.vote_count >= out.lifetime_quota) {
    return { ...state, screen: "done", voteCount: out.vote_count, lifetimeQuota: out.lifetime_quota };
  }
  return {
    ...state,
    screen: "session_intro",
    voteCount: out.vote_count,
    lifetimeQuota: out.lifetime_quota,
  };
}

export function sessionStarted(state: ViewState, info: SessionInfo): ViewState {
  return {
    ...state,
    screen: "comparison",
    match: null,
    viewedLeft: false,
    viewedRight: false,
    votesInSession: info.votes_in_session,
    sessionIndex: info.session_index,
    breakGuidance: null,
  };
}

/** A fresh card always relocks the gate, including the re-served card after a refresh. */
export function matchLoaded(state: ViewState, card: MatchCard): ViewState {
  return {
    ...state,
    screen: "comparison",
    match: card,
    viewedLeft: false,
    viewedRight: false,
    votesInSession: card.session.votes_in_session,
    sessionIndex: card.session.session_index,
    slotError: { left: false, right: false },
  };
}

export function markViewed(state: ViewState, side: Side): ViewState {
  if (state.screen !== "comparison" || state.match === null) {
    throw new Error(`cannot mark ${side} viewed outside an active comparison`);
  }
  return side === "left" ? { ...state, viewedLeft: true } : { ...state, viewedRight: true };
}

export function slotFailed(state: ViewState, side: Side): ViewState {
  return { ...state, slotError: { ...state.slotError, [side]: true } };
}

export function slotRetried(state: ViewState, side: Side): ViewState {
  return { ...state, slotError: { ...state.slotError, [side]: false } };
}

export function voteRecorded(state: ViewState, receipt: VoteReceipt): ViewState {
  if (!canVote(state)) {
    throw new Error("vote recorded without both sides viewed; gate invariant broken");
  }
  const base = {
    ...state,
    match: null,
    viewedLeft: false,
    viewedRight: false,
    voteCount: receipt.vote_count,
    votesInSession: receipt.votes_in_session,
    sessionIndex: receipt.session_index,
    breakGuidance: receipt.break_guidance ?? null,
  };
  if (receipt.quota_exhausted) {
    return { ...base, screen: "done" };
  }
  if (receipt.session_complete) {
    return { ...base, screen: "session_complete" };
  }
  return { ...base, screen: "comparison" };
}

/** Terminal screen for quota refusals raised by the service. */
export function quotaRefused(state: ViewState): ViewState {
  return { ...state, screen: "done", match: null, viewedLeft: false, viewedRight: false };
}
