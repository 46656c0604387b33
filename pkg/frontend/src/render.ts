// HTML string renderers. Pure functions of the API response so they can be
// unit-tested without a browser; main.ts injects the output into the page.

import type {
    CourseSummary,
    RecommendResponse,
    RecommendedCourse,
    ServiceConfig,
    SupportingChunk,
} from "./api.js";
import { escapeHtml, formatRange, formatScore } from "./format.js";

export const EVIDENCE_CAP = 5;

function renderChunk(chunk: SupportingChunk): string {
    return `
    <li class="chunk">
      <span class="chunk-rank">#${chunk.rank}</span>
      <span class="chunk-meta">${escapeHtml(chunk.lesson_title)} · ${formatRange(chunk.start_s, chunk.end_s)} · sim ${formatScore(chunk.similarity)}</span>
      <p class="chunk-text">${escapeHtml(chunk.text)}</p>
    </li>`;
}

function renderBreakdown(course: RecommendedCourse): string {
    if (!course.components) return "";
    const c = course.components;
    return `
    <details class="breakdown">
      <summary>Score breakdown</summary>
      <dl>
        <dt>Global evidence (GE)</dt><dd>${formatScore(c.global_evidence)}</dd>
        <dt>Ranked evidence (RE)</dt><dd>${formatScore(c.ranked_evidence)}</dd>
        <dt>Lesson coverage (LC)</dt><dd>${formatScore(c.lesson_coverage)}</dd>
        <dt>RS = GE · RE · LC</dt><dd>${formatScore(c.rs)}</dd>
      </dl>
    </details>`;
}

function renderEvidence(course: RecommendedCourse, showAll: boolean): string {
    const chunks = course.supporting_chunks;
    if (chunks.length === 0) return "";
    const visible = showAll ? chunks : chunks.slice(0, EVIDENCE_CAP);
    const hidden = chunks.length - visible.length;
    const more =
        hidden > 0
            ? `<button class="show-all" data-course="${escapeHtml(course.course_id)}">Show all ${chunks.length} chunks</button>`
            : "";
    return `
    <section class="evidence">
      <h4>Supporting transcript evidence</h4>
      <ol>${visible.map(renderChunk).join("")}</ol>
      ${more}
    </section>`;
}

export function renderCourseCard(
    course: RecommendedCourse,
    position: number,
    showAll = false,
): string {
    return `
  <article class="card" data-course="${escapeHtml(course.course_id)}">
    <header>
      <span class="position">${position}</span>
      <h3>${escapeHtml(course.title)}</h3>
      <span class="score" title="recommendation score">${formatScore(course.score)}</span>
    </header>
    <p class="meta">${escapeHtml(course.instructor)} · ${course.credits} ECTS</p>
    <p class="description">${escapeHtml(course.description)}</p>
    ${renderBreakdown(course)}
    ${renderEvidence(course, showAll)}
  </article>`;
}

export function renderResults(
    response: RecommendResponse,
    expanded: Set<string> = new Set(),
): string {
    if (response.courses.length === 0) {
        const note = response.note || "no recommendations for this query";
        return `<div class="empty-state">${escapeHtml(note)}</div>`;
    }
    const cards = response.courses
        .map((course, i) =>
            renderCourseCard(course, i + 1, expanded.has(course.course_id)),
        )
        .join("");
    return `
  <p class="run-info">${response.courses.length} recommendation(s) · method ${escapeHtml(response.method)} · ${response.elapsed_ms.toFixed(0)} ms</p>
  ${cards}`;
}

export function renderError(message: string): string {
    return `
  <div class="error" role="alert">
    <p>${escapeHtml(message)}</p>
    <button class="retry">Retry</button>
  </div>`;
}

export function renderLoading(): string {
    return `<div class="loading">Searching transcripts…</div>`;
}

function option(value: string, label: string): string {
    return `<option value="${escapeHtml(value)}">${escapeHtml(label)}</option>`;
}

/** Constraint selectors built from /api/config and /api/courses. */
export function renderConstraintControls(
    config: ServiceConfig,
    courses: CourseSummary[],
): string {
    const methodOptions = config.methods.map((m) => option(m, m)).join("");
    const disciplineOptions =
        option("", "any discipline") +
        config.disciplines.map((d) => option(d, d)).join("");
    const planOptions =
        option("", "any plan") +
        config.study_plans.map((p) => option(p, p)).join("");
    const completed = courses
        .map(
            (c) => `
      <label class="completed-course">
        <input type="checkbox" name="completed" value="${escapeHtml(c.course_id)}">
        ${escapeHtml(c.title)} (${c.credits} ECTS)
      </label>`,
        )
        .join("");
    return `
  <fieldset id="constraints">
    <legend>Filters</legend>
    <label>Method <select name="method">${methodOptions}</select></label>
    <label>Study plan <select name="plan_id">${planOptions}</select></label>
    <label>Discipline <select name="discipline">${disciplineOptions}</select></label>
    <label>Min credits <input type="number" name="min_credits" min="1"></label>
    <label>Max credits <input type="number" name="max_credits" min="1"></label>
    <label><input type="checkbox" name="require_prerequisites_met"> Only courses whose prerequisites I completed</label>
    <div class="completed-list">${completed}</div>
  </fieldset>`;
}
