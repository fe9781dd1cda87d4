/**
 * Offline draft persistence: annotation sessions can span reloads, so local
 * answers are saved per (annotator, task) and cleared on successful submit.
 * Two tabs editing the same task resolve last-write-wins with a warning.
 */

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

interface DraftEnvelope<T> {
  savedAt: number;
  session: string;
  data: T;
}

export class DraftStore {
  private readonly storage: StorageLike;
  private readonly session: string;

  constructor(storage: StorageLike, session: string = Math.random().toString(36).slice(2)) {
    this.storage = storage;
    this.session = session;
  }

  private key(annotator: string, taskId: string): string {
    return `crux-draft:${annotator}:${taskId}`;
  }

  save<T>(annotator: string, taskId: string, data: T): void {
    const envelope: DraftEnvelope<T> = { savedAt: Date.now(), session: this.session, data };
    this.storage.setItem(this.key(annotator, taskId), JSON.stringify(envelope));
  }

  /**
   * Load a saved draft. `foreignWrite` is true when the last write came from
   * a different session (another tab); callers surface a warning for that.
   */
  load<T>(annotator: string, taskId: string): { data: T; foreignWrite: boolean } | null {
    const raw = this.storage.getItem(this.key(annotator, taskId));
    if (raw === null) return null;
    let envelope: DraftEnvelope<T>;
    try {
      envelope = JSON.parse(raw) as DraftEnvelope<T>;
    } catch {
      this.storage.removeItem(this.key(annotator, taskId));
      return null;
    }
    return { data: envelope.data, foreignWrite: envelope.session !== this.session };
  }

  clear(annotator: string, taskId: string): void {
    this.storage.removeItem(this.key(annotator, taskId));
  }
}
