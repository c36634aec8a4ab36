export interface StatusDoc {
  iteration: number;
  annotated: number;
  rejected: number;
  pseudo: number;
  budget_remaining: number;
  test_accuracy: number | null;
  state: 'RUNNING' | 'AWAITING_LABELS' | 'DONE';
}

export interface QueueItem {
  sample_id: number;
  features: number[];
  predictions: number[];
  total_loss: number;
}

/** A category index, or 'reject' for "none of the defined categories". */
export type Decision = { label: number } | 'reject';

export interface PostResult {
  ok: boolean;
  status: number;
  accepted: boolean;
  duplicate?: boolean;
  error?: string;
}
