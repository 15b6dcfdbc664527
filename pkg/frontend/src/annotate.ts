// Annotation segment validation shared by the annotate view and its tests.

export const MAX_SEGMENT_TICKS = 100; // 10 s at 10 Hz

export interface SegmentDraft {
  trajectoryId: string;
  t0: number;
  t1: number;
  instruction: string;
  annotatorId: string;
}

export function validateSegment(draft: SegmentDraft): string | null {
  if (!(Number.isInteger(draft.t0) && Number.isInteger(draft.t1))) {
    return "tick bounds must be integers";
  }
  if (draft.t0 < 0 || draft.t1 <= draft.t0) {
    return "segment must span at least one tick";
  }
  if (draft.t1 - draft.t0 > MAX_SEGMENT_TICKS) {
    return `segment spans ${draft.t1 - draft.t0} ticks, max ${MAX_SEGMENT_TICKS}`;
  }
  if (draft.instruction.trim().length === 0) {
    return "instruction text is required";
  }
  return null;
}

export function overlapsExisting(draft: SegmentDraft,
                                 existing: SegmentDraft[]): boolean {
  return existing.some(
    (seg) => seg.annotatorId === draft.annotatorId
      && seg.trajectoryId === draft.trajectoryId
      && draft.t0 < seg.t1 && seg.t0 < draft.t1,
  );
}

export function toUploadRecord(draft: SegmentDraft) {
  return {
    trajectory_id: draft.trajectoryId,
    trajectory_path: "",
    t0: draft.t0,
    t1: draft.t1,
    instruction: draft.instruction.trim(),
    source: "posthoc",
    annotator_id: draft.annotatorId,
  };
}
