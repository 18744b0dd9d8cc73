/** Bad user-supplied values (dims, dtypes, config keys). */
export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValidationError";
  }
}

/** Malformed bytes in a volume container. */
export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

/** A voxeval subprocess exited non-zero (or could not be started). */
export class CliError extends Error {
  readonly status: number | null;
  readonly stderr: string;

  constructor(message: string, status: number | null, stderr: string) {
    super(message);
    this.name = "CliError";
    this.status = status;
    this.stderr = stderr;
  }
}
