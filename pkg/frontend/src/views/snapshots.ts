import { StatePayload } from "../protocol.js";

export interface SnapshotsDelegate {
  saveSnapshot(name: string, overwrite: boolean): void;
  restoreSnapshot(name: string): void;
}

/**
 * Snapshot controls: a name field with a save button (disabled while the
 * name is empty) and a dropdown of saved names, in server order, with a
 * restore button. Saving over an existing name asks for confirmation.
 */
export class SnapshotsView {
  readonly el = document.createElement("div");
  readonly nameInput: HTMLInputElement;
  readonly saveButton: HTMLButtonElement;
  readonly list: HTMLSelectElement;
  readonly restoreButton: HTMLButtonElement;

  private names: string[] = [];

  constructor(
    private readonly delegate: SnapshotsDelegate,
    private readonly confirmFn: (message: string) => boolean = defaultConfirm,
  ) {
    this.el.className = "snapshots-view";

    this.nameInput = document.createElement("input");
    this.nameInput.type = "text";
    this.nameInput.placeholder = "snapshot name";
    this.nameInput.className = "snap-name";

    this.saveButton = document.createElement("button");
    this.saveButton.textContent = "save";
    this.saveButton.className = "snap-save";
    this.saveButton.disabled = true;

    this.list = document.createElement("select");
    this.list.className = "snap-list";

    this.restoreButton = document.createElement("button");
    this.restoreButton.textContent = "restore";
    this.restoreButton.className = "snap-restore";
    this.restoreButton.disabled = true;

    this.nameInput.addEventListener("input", () => {
      this.saveButton.disabled = this.nameInput.value.trim() === "";
    });
    this.saveButton.addEventListener("click", () => {
      const name = this.nameInput.value.trim();
      if (name === "") return;
      let overwrite = false;
      if (this.names.includes(name)) {
        if (!this.confirmFn(`Overwrite snapshot "${name}"?`)) return;
        overwrite = true;
      }
      this.delegate.saveSnapshot(name, overwrite);
    });
    this.restoreButton.addEventListener("click", () => {
      if (this.list.value !== "") this.delegate.restoreSnapshot(this.list.value);
    });

    this.el.append(this.nameInput, this.saveButton, this.list, this.restoreButton);
  }

  update(payload: StatePayload): void {
    if (!payload.snapshots) return;
    this.names = payload.snapshots;
    const selected = this.list.value;
    this.list.textContent = "";
    for (const name of this.names) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      this.list.appendChild(opt);
    }
    if (this.names.includes(selected)) this.list.value = selected;
    this.restoreButton.disabled = this.names.length === 0;
  }
}

function defaultConfirm(message: string): boolean {
  return typeof window !== "undefined" && typeof window.confirm === "function"
    ? window.confirm(message)
    : true;
}
