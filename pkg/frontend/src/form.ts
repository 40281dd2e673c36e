/** Client-side validation for the launch form; mirrors the server's 422 rules. */

export interface LaunchInput {
  species: string;
  maxPapers: number;
}

export interface ValidationResult {
  ok: boolean;
  errors: Partial<Record<keyof LaunchInput, string>>;
}

export function validateLaunchForm(
  input: LaunchInput,
  maxPapersCeiling = 25,
): ValidationResult {
  const errors: ValidationResult['errors'] = {};
  const species = input.species.trim();
  if (!species) {
    errors.species = 'Species is required.';
  } else if (species.split(/\s+/).length < 2) {
    errors.species = 'Give at least genus and species, e.g. "Fusarium venenatum".';
  }
  if (!Number.isInteger(input.maxPapers)) {
    errors.maxPapers = 'Maximum papers must be a whole number.';
  } else if (input.maxPapers < 1 || input.maxPapers > maxPapersCeiling) {
    errors.maxPapers = `Maximum papers must be between 1 and ${maxPapersCeiling}.`;
  }
  return { ok: Object.keys(errors).length === 0, errors };
}

/** Maps server rejections onto inline form feedback. */
export function describeSubmitError(status: number, detail: string): string {
  if (status === 422) return detail;
  if (status === 429) return 'The job queue is full — try again in a moment.';
  return `Unexpected server error (${status}).`;
}
