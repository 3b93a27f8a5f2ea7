/** Wire types of the completion service. */

export type Point3 = [number, number, number];

export interface HealthResponse {
  status: string;
  model_id: string;
}

export interface PromptsResponse {
  category: string;
  part_type: string | null;
  prompts: string[];
}

export interface ShapeListResponse {
  shapes: string[];
}

export interface ShapeResponse {
  shape_id: string;
  mode: string;
  removed_part_type: string;
  gt_prompt: string;
  n_points: number;
  points: Point3[];
}

export interface CompletionRequest {
  points: Point3[];
  prompt?: string;
  k?: number;
  part_type?: string;
}

export interface CompletionEntry {
  prompt: string;
  missing: Point3[];
  coarse: Point3[];
  full_size: number;
  oov: boolean;
}

export interface CompletionResponse {
  completions: CompletionEntry[];
  model_id: string;
  timing_ms: number;
}
