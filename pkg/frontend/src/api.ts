export interface ContentItem {
  id: string;
  w: number;
  h: number;
  n_boxes: number;
}

export interface StyleItem {
  id: string;
  condition: string;
}

export interface PlanResponse {
  path: string;
  n_e_raw: number;
  n_unique: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status = 0) {
    super(message);
    this.name = "ApiError";
  }
}

// Same-origin by default (the preview server hosts this app via --ui-dir);
// point elsewhere with setApiBase when developing against a remote server.
let base = "";

export function setApiBase(url: string): void {
  base = url.replace(/\/+$/, "");
}

async function errorMessage(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") return body.error;
  } catch {
    // non-JSON error body, fall through
  }
  return `request failed (${res.status})`;
}

async function getJson<T>(path: string): Promise<T> {
  let res: Response;
  try {
    res = await fetch(base + path);
  } catch {
    throw new ApiError("server unreachable");
  }
  if (!res.ok) throw new ApiError(await errorMessage(res), res.status);
  return res.json() as Promise<T>;
}

export function listContents(): Promise<ContentItem[]> {
  return getJson("/api/contents");
}

export function listStyles(): Promise<StyleItem[]> {
  return getJson("/api/styles");
}

export function imageUrl(id: string): string {
  return `${base}/api/image/${encodeURIComponent(id)}`;
}

export function stylizeUrl(content: string, style: string, alpha: number): string {
  const q = new URLSearchParams({
    content,
    style,
    alpha: String(alpha),
  });
  return `${base}/api/stylize?${q.toString()}`;
}

export async function fetchStylized(
  content: string,
  style: string,
  alpha: number,
): Promise<Blob> {
  let res: Response;
  try {
    res = await fetch(stylizeUrl(content, style, alpha));
  } catch {
    throw new ApiError("server unreachable");
  }
  if (!res.ok) throw new ApiError(await errorMessage(res), res.status);
  return res.blob();
}

export async function postPlan(planJson: string): Promise<PlanResponse> {
  let res: Response;
  try {
    res = await fetch(`${base}/api/plan`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: planJson,
    });
  } catch {
    throw new ApiError("server unreachable");
  }
  if (!res.ok) throw new ApiError(await errorMessage(res), res.status);
  return res.json() as Promise<PlanResponse>;
}
