// Typed client for the recommendation service. The UI never computes
// scores itself; everything rendered comes from these responses.

export interface Constraints {
    plan_id?: string;
    max_credits?: number;
    min_credits?: number;
    discipline?: string;
    require_prerequisites_met?: boolean;
    completed_course_ids?: string[];
}

export interface RecommendRequest {
    query: string;
    constraints?: Constraints;
    method?: string;
    top_n?: number;
}

export interface SupportingChunk {
    chunk_id: string;
    lesson_title: string;
    text: string;
    start_s: number;
    end_s: number;
    similarity: number;
    rank: number;
}

export interface ScoreComponents {
    global_evidence: number;
    ranked_evidence: number;
    lesson_coverage: number;
    rs: number;
}

export interface RecommendedCourse {
    course_id: string;
    title: string;
    instructor: string;
    credits: number;
    description: string;
    score: number;
    components: ScoreComponents | null;
    supporting_chunks: SupportingChunk[];
}

export interface RecommendResponse {
    query: string;
    method: string;
    t_q: number;
    k: number;
    candidate_count: number;
    note: string;
    elapsed_ms: number;
    courses: RecommendedCourse[];
}

export interface CourseSummary {
    course_id: string;
    title: string;
    credits: number;
    discipline: string;
}

export interface ServiceConfig {
    k: number;
    t_q_policy: string;
    embedder_kind: string;
    methods: string[];
    disciplines: string[];
    study_plans: string[];
}

export class ApiError extends Error {
    constructor(public status: number, detail: string) {
        super(detail);
        this.name = "ApiError";
    }
}

async function parseDetail(response: Response): Promise<string> {
    try {
        const body = await response.json();
        if (body && typeof body.detail === "string") return body.detail;
    } catch {
        // non-JSON error body; fall through to the generic message
    }
    return `request failed with status ${response.status}`;
}

export class ApiClient {
    private pending: AbortController | null = null;

    constructor(
        private baseUrl: string = "",
        private fetchFn: typeof fetch = fetch,
    ) {}

    /** POST /api/recommend; a new call aborts the previous in-flight one. */
    async recommend(request: RecommendRequest): Promise<RecommendResponse> {
        this.pending?.abort();
        const controller = new AbortController();
        this.pending = controller;
        try {
            const response = await this.fetchFn(`${this.baseUrl}/api/recommend`, {
                method: "POST",
                headers: { "Content-Type": "application/json" },
                body: JSON.stringify(request),
                signal: controller.signal,
            });
            if (!response.ok) {
                throw new ApiError(response.status, await parseDetail(response));
            }
            return (await response.json()) as RecommendResponse;
        } finally {
            if (this.pending === controller) this.pending = null;
        }
    }

    async courses(): Promise<CourseSummary[]> {
        const response = await this.fetchFn(`${this.baseUrl}/api/courses`);
        if (!response.ok) {
            throw new ApiError(response.status, await parseDetail(response));
        }
        const body = await response.json();
        return body.courses as CourseSummary[];
    }

    async config(): Promise<ServiceConfig> {
        const response = await this.fetchFn(`${this.baseUrl}/api/config`);
        if (!response.ok) {
            throw new ApiError(response.status, await parseDetail(response));
        }
        return (await response.json()) as ServiceConfig;
    }
}
