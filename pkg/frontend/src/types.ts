/** Payload shapes of the arena HTTP API, as consumed by this client. */

export interface OnboardRequest {
  access_code: string;
  first_name: string;
  last_name: string;
  roles: string[];
  used_ai_tools_before: boolean;
}

export interface OnboardResponse {
  token: string;
  expert_id: string;
  vote_count: number;
  lifetime_quota: number;
}

export interface SessionInfo {
  session_index: number;
  votes_in_session: number;
  target: number;
  state: "open" | "complete";
  break_guidance: string;
}

export interface SlotView {
  slot_token: string;
  artifact_ref: string;
}

export interface PromptView {
  prompt_id: string;
  title: string;
  type: string;
  sector: string;
  goal: string;
  scenario: string;
  vibe: string;
  constraints: string;
}

export interface MatchCard {
  match_id: string;
  prompt: PromptView;
  instruction: string;
  left: SlotView;
  right: SlotView;
  created_at: string;
  session: SessionInfo;
}

export interface VoteReceipt {
  match_id: string;
  recorded: boolean;
  vote_count: number;
  session_index: number;
  votes_in_session: number;
  target: number;
  session_complete: boolean;
  quota_exhausted: boolean;
  break_guidance?: string;
  duplicate?: boolean;
}

export interface Problem {
  code: string;
  detail: string;
  fields?: string[];
  offset?: number;
}

export type Side = "left" | "right";
