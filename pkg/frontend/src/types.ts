/** Shapes of the documents the review API serves. The UI renders these
 * verbatim: every displayed value originates in one of these payloads. */

export interface RunSummary {
  run_id: string;
  stage: string;
  gate_states: Record<string, string>;
  awaiting: string | null;
  error: string | null;
  failed_stage: string | null;
  revision: number;
  shot_count: number;
  thumbnail_refs: string[];
  warnings_count: number;
  updated_at: string;
}

export interface RunListPage {
  runs: RunSummary[];
  count: number;
}

export interface ControlSignalsDoc {
  sample_id: string;
  genre: string;
  shot_count: number;
  movements: string[];
  subject_count: string;
  dynamicity: string;
}

export interface ShotTriplet {
  shot_init: string;
  movement: string;
  shot_end: string;
}

export interface ScreenplayArtifact {
  screenplay: {
    signals: ControlSignalsDoc;
    scene: {
      scenario: string;
      [key: string]: unknown;
    };
    triplets: ShotTriplet[];
  };
  rendered: string;
}

export interface KeyframeDoc {
  index: number;
  ref: string;
  model_id: string;
  prompt: string;
  seed: number;
  source_ref: string | null;
}

export interface StoryboardArtifact {
  storyboard: { keyframes: KeyframeDoc[] };
  keyframe_refs: string[];
}

export interface ClipEntry {
  shot: number;
  ref: string;
  frames: number;
  first_ref: string;
  last_ref: string;
}

export interface TransitionEntry {
  pair: [number, number];
  tracks_ref: string;
  plan_ref: string;
  control_ref: string;
  clip_ref: string;
  cut_a: number;
  cut_b: number;
  frames: number;
  warnings: string[];
}

export interface FinalArtifact {
  edl: { segments: unknown[]; total_frames: number };
  video_ref: string;
  total_frames: number;
}

export interface RunArtifacts {
  screenplay?: ScreenplayArtifact;
  storyboard?: StoryboardArtifact;
  clips?: { clips: ClipEntry[] };
  transitions?: { transitions: TransitionEntry[] };
  final?: FinalArtifact;
}

export interface RunDetail {
  run_id: string;
  signals: ControlSignalsDoc;
  stage: string;
  gate_states: Record<string, string>;
  artifacts: RunArtifacts;
  error: string | null;
  failed_stage: string | null;
  revision: number;
  created_at: string;
  updated_at: string;
  awaiting: string | null;
  rendered_screenplay: string | null;
  keyframe_refs: string[];
}

export interface EventRecord {
  ts: string;
  event: string;
  [key: string]: unknown;
}

export interface TrajectoryPoint {
  f: number;
  x: number;
  y: number;
}

export interface ControlFieldDoc {
  transition_frames: number;
  width: number;
  height: number;
  points: { id: number; trajectory: TrajectoryPoint[] }[];
}
