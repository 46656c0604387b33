import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
    });
}

describe("ApiClient.recommend", () => {
    it("posts the request body and returns the parsed response", async () => {
        const payload = { query: "sql", method: "ragear", courses: [] };
        const fetchFn = vi.fn(async () => jsonResponse(payload));
        const client = new ApiClient("http://svc", fetchFn as typeof fetch);

        const result = await client.recommend({ query: "sql", top_n: 3 });

        expect(result.query).toBe("sql");
        const [url, init] = fetchFn.mock.calls[0] as unknown as [string, RequestInit];
        expect(url).toBe("http://svc/api/recommend");
        expect(init.method).toBe("POST");
        expect(JSON.parse(init.body as string)).toEqual({ query: "sql", top_n: 3 });
    });

    it("raises ApiError with the service detail on 4xx", async () => {
        const fetchFn = vi.fn(async () =>
            jsonResponse({ detail: "query must be non-empty" }, 400),
        );
        const client = new ApiClient("", fetchFn as typeof fetch);

        await expect(client.recommend({ query: " " })).rejects.toMatchObject({
            name: "ApiError",
            status: 400,
            message: "query must be non-empty",
        });
    });

    it("falls back to a generic message for non-JSON error bodies", async () => {
        const fetchFn = vi.fn(
            async () => new Response("<html>gateway</html>", { status: 502 }),
        );
        const client = new ApiClient("", fetchFn as typeof fetch);

        await expect(client.recommend({ query: "x" })).rejects.toThrow(
            "request failed with status 502",
        );
    });

    it("aborts the previous in-flight request on resubmission", async () => {
        const seenSignals: AbortSignal[] = [];
        const fetchFn = vi.fn((_url: string, init?: RequestInit) => {
            seenSignals.push(init!.signal as AbortSignal);
            return new Promise<Response>((resolve, reject) => {
                init!.signal!.addEventListener("abort", () =>
                    reject(new DOMException("aborted", "AbortError")),
                );
                setTimeout(() => resolve(jsonResponse({ courses: [] })), 5);
            });
        });
        const client = new ApiClient("", fetchFn as unknown as typeof fetch);

        const first = client.recommend({ query: "first" });
        const second = client.recommend({ query: "second" });

        await expect(first).rejects.toHaveProperty("name", "AbortError");
        await expect(second).resolves.toBeTruthy();
        expect(seenSignals[0].aborted).toBe(true);
        expect(seenSignals[1].aborted).toBe(false);
    });
});

describe("ApiClient.courses and config", () => {
    it("unwraps the course list", async () => {
        const fetchFn = vi.fn(async () =>
            jsonResponse({
                courses: [
                    { course_id: "C1", title: "T", credits: 6, discipline: "INF/01" },
                ],
            }),
        );
        const client = new ApiClient("", fetchFn as typeof fetch);
        const courses = await client.courses();
        expect(courses).toHaveLength(1);
        expect(courses[0].course_id).toBe("C1");
    });

    it("propagates errors from the config endpoint", async () => {
        const fetchFn = vi.fn(async () =>
            jsonResponse({ detail: "pipeline not loaded" }, 503),
        );
        const client = new ApiClient("", fetchFn as typeof fetch);
        await expect(client.config()).rejects.toBeInstanceOf(ApiError);
    });
});
