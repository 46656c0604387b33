import { ApiClient, ApiError, Constraints, RecommendResponse } from "./api.js";
import {
    renderConstraintControls,
    renderError,
    renderLoading,
    renderResults,
} from "./render.js";

const client = new ApiClient();
const form = document.getElementById("query-form") as HTMLFormElement;
const queryInput = document.getElementById("query") as HTMLInputElement;
const filtersHost = document.getElementById("filters") as HTMLElement;
const resultsHost = document.getElementById("results") as HTMLElement;

let lastResponse: RecommendResponse | null = null;
const expandedCourses = new Set<string>();

function readConstraints(): { constraints?: Constraints; method: string } {
    const fd = new FormData(form);
    const method = (fd.get("method") as string) || "ragear";
    const constraints: Constraints = {};
    const plan = fd.get("plan_id") as string;
    if (plan) constraints.plan_id = plan;
    const discipline = fd.get("discipline") as string;
    if (discipline) constraints.discipline = discipline;
    const minCredits = fd.get("min_credits") as string;
    if (minCredits) constraints.min_credits = Number(minCredits);
    const maxCredits = fd.get("max_credits") as string;
    if (maxCredits) constraints.max_credits = Number(maxCredits);
    if (fd.get("require_prerequisites_met")) {
        constraints.require_prerequisites_met = true;
        constraints.completed_course_ids = fd.getAll("completed") as string[];
    }
    // omit the constraints object entirely when every control is cleared
    if (Object.keys(constraints).length === 0) return { method };
    return { constraints, method };
}

async function submit(): Promise<void> {
    const query = queryInput.value.trim();
    if (!query) {
        resultsHost.innerHTML = renderError("Please enter a query first.");
        return;
    }
    resultsHost.innerHTML = renderLoading();
    const { constraints, method } = readConstraints();
    try {
        lastResponse = await client.recommend({ query, constraints, method });
        expandedCourses.clear();
        resultsHost.innerHTML = renderResults(lastResponse);
    } catch (err) {
        if (err instanceof DOMException && err.name === "AbortError") {
            return; // superseded by a newer submission
        }
        const message =
            err instanceof ApiError
                ? `Service error (${err.status}): ${err.message}`
                : "Could not reach the recommendation service.";
        resultsHost.innerHTML = renderError(message);
    }
}

form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit();
});

resultsHost.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("retry")) {
        void submit();
    } else if (target.classList.contains("show-all") && lastResponse) {
        const courseId = target.dataset.course;
        if (courseId) {
            expandedCourses.add(courseId);
            resultsHost.innerHTML = renderResults(lastResponse, expandedCourses);
        }
    }
});

async function init(): Promise<void> {
    try {
        const [config, courses] = await Promise.all([
            client.config(),
            client.courses(),
        ]);
        filtersHost.innerHTML = renderConstraintControls(config, courses);
    } catch {
        filtersHost.innerHTML = renderError(
            "Could not load catalogue filters; plain queries still work.",
        );
    }
}

void init();
