/** Browser bootstrap: wires the workspace to the page.
 *
 * Layout and flows live in the testable modules; this file only binds DOM
 * events. The service origin defaults to same-origin and can be overridden
 * with ?api=http://host:port.
 */

import { ApiClient } from "./api.js";
import { Workspace } from "./workspace.js";
import {
  renderDocument,
  renderDocumentList,
  renderJob,
} from "./render.js";

function el<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node;
}

const apiBase =
  new URLSearchParams(window.location.search).get("api") ?? "";
const api = new ApiClient(apiBase);

let workspace: Workspace | null = null;

async function refreshSegments(): Promise<void> {
  if (!workspace) return;
  el("#segments").innerHTML = renderDocument(workspace.list(), workspace.codes);
  bindEditors();
}

async function openDocument(docId: string): Promise<void> {
  workspace = new Workspace(api, docId);
  await workspace.load();
  el("#doc-title").textContent = docId;
  await refreshSegments();
}

function bindEditors(): void {
  for (const area of document.querySelectorAll<HTMLTextAreaElement>(
    "textarea.final",
  )) {
    area.addEventListener("change", () => void saveSegment(area));
  }
}

async function saveSegment(area: HTMLTextAreaElement): Promise<void> {
  if (!workspace) return;
  const segId = Number(area.dataset["segId"]);
  const editor = workspace.openEditor(segId);
  editor.edit(area.value);
  if (!editor.canSubmit) return;
  const result = await workspace.save(editor);
  if (result.kind === "conflict") {
    const { conflict } = result;
    const keep = window.confirm(
      `Segment changed on the server.\n\nServer: ${conflict.theirs.final}\n` +
        `Yours: ${conflict.mine}\n\nRe-apply your edit?`,
    );
    if (keep) await conflict.reapply();
  }
  await refreshSegments();
}

async function replaceAll(): Promise<void> {
  if (!workspace) return;
  const find = el<HTMLInputElement>("#find").value;
  const replace = el<HTMLInputElement>("#replace").value;
  if (!find) return;
  const result = await workspace.replaceAll(find, replace);
  el("#status").textContent =
    `replaced ${result.replacements} occurrences across ` +
    `${result.changed_segments} segments`;
  await refreshSegments();
}

async function startRun(): Promise<void> {
  if (!workspace) return;
  const config = JSON.parse(el<HTMLTextAreaElement>("#run-config").value);
  const job = await workspace.run(config, {
    onProgress: (progress) => {
      el("#job").innerHTML = renderJob(progress);
    },
  });
  el("#job").innerHTML = renderJob(job);
  await refreshSegments();
}

async function init(): Promise<void> {
  const documents = await api.listDocuments();
  const list = el("#documents");
  list.innerHTML = renderDocumentList(documents);
  list.addEventListener("click", (event) => {
    const item = (event.target as HTMLElement).closest<HTMLElement>("[data-doc-id]");
    if (item?.dataset["docId"]) void openDocument(item.dataset["docId"]);
  });
  el("#replace-all").addEventListener("click", () => void replaceAll());
  el("#start-run").addEventListener("click", () => void startRun());
}

void init();
