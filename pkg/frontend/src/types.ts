/** Wire types mirroring the annotation-service JSON payloads. */

export type TaskKind = "span_annotation" | "screen_label" | "eval_mark";

export interface TaskPayload {
  title: string;
  context: string;
  disease_name: string;
  disease_description: string;
  /** eval_mark tasks carry the extracted record under review */
  record_id?: string;
  record_text?: string;
  start_char?: number;
  end_char?: number;
  score?: number;
}

export interface AnnotationTask {
  task_id: string;
  kind: TaskKind;
  disease_id: string;
  pmid: string;
  payload: TaskPayload;
  status: string;
}

export interface SpanSubmission {
  span_start: number;
  answer_text: string;
  subgroup_only: boolean;
}

export interface QAItem {
  id: string;
  disease_id: string;
  pmid: string;
  context: string;
  question: string;
  answers: { span_start: number; text: string }[];
  subgroup_only: boolean;
}

export type Mark = 1 | 2 | 3;

export interface MarkSubmission {
  mark: Mark;
  highly_significant: boolean;
}

export interface EvalMark {
  record_ref: string;
  mark: Mark;
  highly_significant: boolean;
  annotator_id: string;
  timestamp: string;
}

export interface DiseaseSummary {
  kegg_id: string;
  name: string;
  family: string | null;
  open_tasks: Record<TaskKind, number>;
}
