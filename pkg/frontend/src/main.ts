import {
  ContentItem,
  StyleItem,
  fetchStylized,
  imageUrl,
  listContents,
  listStyles,
  postPlan,
} from "./api.js";
import {
  ALPHA_MAX,
  ALPHA_MIN,
  ALPHA_STEP,
  CANONICAL_ALPHAS,
  CONDITIONS,
  SessionState,
  buildPlan,
  clampAlpha,
  exportPlanJson,
  initialSession,
  planCardinality,
  toggleAlpha,
  toggleApproval,
  validateSession,
} from "./plan.js";
import { PreviewController } from "./state.js";

const state: SessionState = initialSession();
let contents: ContentItem[] = [];
let styles: StyleItem[] = [];
let activeTab = CONDITIONS[0];
let currentObjectUrl: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const banner = () => el<HTMLDivElement>("banner");

function showError(message: string): void {
  banner().textContent = message;
  banner().hidden = false;
}

function clearError(): void {
  banner().hidden = true;
}

const preview = new PreviewController<Blob>(
  fetchStylized,
  (blob) => {
    clearError();
    const url = URL.createObjectURL(blob);
    const img = el<HTMLImageElement>("stylized");
    img.src = url;
    if (currentObjectUrl) URL.revokeObjectURL(currentObjectUrl);
    currentObjectUrl = url;
  },
  // Failed preview: keep whatever is on screen, just say what went wrong.
  (message) => showError(`preview failed: ${message}`),
);

function requestPreview(immediate = false): void {
  if (!state.selectedContent || !state.selectedStyle) return;
  const req = {
    content: state.selectedContent,
    style: state.selectedStyle,
    alpha: state.alpha,
  };
  if (immediate) preview.requestNow(req);
  else preview.request(req);
}

function renderContents(): void {
  const list = el<HTMLUListElement>("contents");
  list.innerHTML = "";
  for (const item of contents) {
    const li = document.createElement("li");
    li.textContent = `${item.id} (${item.w}×${item.h}, ${item.n_boxes} boxes)`;
    li.className = item.id === state.selectedContent ? "selected" : "";
    li.onclick = () => {
      state.selectedContent = item.id;
      el<HTMLImageElement>("original").src = imageUrl(item.id);
      renderContents();
      requestPreview(true);
    };
    list.appendChild(li);
  }
}

function renderTabs(): void {
  const tabs = el<HTMLDivElement>("tabs");
  tabs.innerHTML = "";
  for (const condition of CONDITIONS) {
    const btn = document.createElement("button");
    btn.textContent = condition.replace("_", " ");
    btn.className = condition === activeTab ? "tab active" : "tab";
    btn.onclick = () => {
      activeTab = condition;
      renderTabs();
      renderStyles();
    };
    tabs.appendChild(btn);
  }
}

function renderStyles(): void {
  const grid = el<HTMLDivElement>("styles");
  grid.innerHTML = "";
  for (const style of styles.filter((s) => s.condition === activeTab)) {
    const card = document.createElement("div");
    card.className = "style-card" + (style.id === state.selectedStyle ? " selected" : "");

    const thumb = document.createElement("img");
    thumb.src = imageUrl(style.id);
    thumb.alt = style.id;
    thumb.onclick = () => {
      state.selectedStyle = style.id;
      renderStyles();
      requestPreview(true);
    };

    const approve = document.createElement("button");
    const approved = state.approvedStyles.includes(style.id);
    approve.textContent = approved ? "✓ approved" : "approve";
    approve.className = approved ? "approve on" : "approve";
    approve.onclick = () => {
      state.approvedStyles = toggleApproval(state.approvedStyles, style.id);
      renderStyles();
      renderExport();
    };

    const label = document.createElement("span");
    label.textContent = style.id;

    card.append(thumb, label, approve);
    grid.appendChild(card);
  }
}

function renderAlphaChips(): void {
  const row = el<HTMLDivElement>("alpha-chips");
  row.innerHTML = "";
  const values = [...new Set([...CANONICAL_ALPHAS, ...state.chosenAlphas])].sort(
    (a, b) => a - b,
  );
  for (const value of values) {
    const chip = document.createElement("button");
    chip.textContent = String(value);
    chip.className = state.chosenAlphas.includes(value) ? "chip on" : "chip";
    chip.onclick = () => {
      state.chosenAlphas = toggleAlpha(state.chosenAlphas, value);
      renderAlphaChips();
      renderExport();
    };
    row.appendChild(chip);
  }
  const add = document.createElement("button");
  add.textContent = `+ current (${state.alpha})`;
  add.className = "chip add";
  add.onclick = () => {
    state.chosenAlphas = toggleAlpha(state.chosenAlphas, state.alpha);
    renderAlphaChips();
    renderExport();
  };
  row.appendChild(add);
}

function renderExport(): void {
  const [raw, unique] = planCardinality(
    contents.length,
    state.approvedStyles.length,
    state.chosenAlphas,
  );
  el<HTMLSpanElement>("counts").textContent =
    `${contents.length} contents × ${state.approvedStyles.length} styles × ` +
    `${state.chosenAlphas.length} strengths → raw ${raw}, unique ${unique}`;
  const reason = validateSession(state);
  const btn = el<HTMLButtonElement>("export");
  btn.disabled = reason !== null;
  btn.title = reason ?? "";
}

async function onExport(): Promise<void> {
  const reason = validateSession(state);
  if (reason) {
    showError(reason);
    return;
  }
  const conditionsById = new Map(styles.map((s) => [s.id, s.condition]));
  const body = exportPlanJson(
    buildPlan(
      state,
      contents.map((c) => c.id),
      conditionsById,
    ),
  );
  const status = el<HTMLDivElement>("export-status");
  try {
    const saved = await postPlan(body);
    clearError();
    status.textContent =
      `saved ${saved.path} (raw ${saved.n_e_raw}, unique ${saved.n_unique})`;
  } catch (err) {
    // Selections stay in state, so the operator can just retry.
    showError(`export failed: ${err instanceof Error ? err.message : String(err)}`);
  }
}

function wireSlider(): void {
  const slider = el<HTMLInputElement>("alpha");
  slider.min = String(ALPHA_MIN);
  slider.max = String(ALPHA_MAX);
  slider.step = String(ALPHA_STEP);
  slider.value = String(state.alpha);
  el<HTMLOutputElement>("alpha-value").textContent = state.alpha.toFixed(1);
  slider.oninput = () => {
    state.alpha = clampAlpha(Number(slider.value));
    el<HTMLOutputElement>("alpha-value").textContent = state.alpha.toFixed(1);
    requestPreview();
  };
}

async function init(): Promise<void> {
  try {
    [contents, styles] = await Promise.all([listContents(), listStyles()]);
  } catch (err) {
    showError(err instanceof Error ? err.message : String(err));
    return;
  }
  renderContents();
  renderTabs();
  renderStyles();
  renderAlphaChips();
  renderExport();
  wireSlider();
  el<HTMLButtonElement>("export").onclick = () => void onExport();
  if (contents.length > 0) {
    state.selectedContent = contents[0].id;
    el<HTMLImageElement>("original").src = imageUrl(contents[0].id);
    renderContents();
  }
}

void init();
