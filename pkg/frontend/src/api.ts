/** Typed client for the annotation service JSON API.
 *
 * The server only ever exposes blinded A/B pairs; nothing in these types
 * carries a system identity.
 */

export interface Session {
  total: number;
  completed: number;
  next_item: string | null;
}

export interface BlindPair {
  item_id: string;
  source_en: string;
  text_A: string;
  text_B: string;
  fluency_scale: number[];
}

export interface JudgmentPayload {
  item_id: string;
  annotator_id: string;
  preserved_a: boolean;
  preserved_b: boolean;
  fluency_a: number;
  fluency_b: number;
  preference: "A" | "B" | "tie";
}

export type SubmitOutcome = "recorded" | "duplicate";

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`api error ${status}: ${detail}`);
  }
}

export interface ApiClient {
  session(annotator: string): Promise<Session>;
  item(itemId: string, annotator: string): Promise<BlindPair>;
  submit(payload: JudgmentPayload): Promise<SubmitOutcome>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class HttpApi implements ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) {
      throw new ApiError(res.status, await res.text());
    }
    return (await res.json()) as T;
  }

  session(annotator: string): Promise<Session> {
    return this.get(`/api/session?annotator=${encodeURIComponent(annotator)}`);
  }

  item(itemId: string, annotator: string): Promise<BlindPair> {
    const id = encodeURIComponent(itemId);
    return this.get(`/api/item/${id}?annotator=${encodeURIComponent(annotator)}`);
  }

  async submit(payload: JudgmentPayload): Promise<SubmitOutcome> {
    const res = await this.fetchFn(`${this.baseUrl}/api/judgment`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (res.status === 201) return "recorded";
    // first judgment wins server-side; treat a rerun as already done
    if (res.status === 409) return "duplicate";
    throw new ApiError(res.status, await res.text());
  }
}
