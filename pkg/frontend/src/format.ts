// Display formatting helpers, kept DOM-free so they test under node.

/** Seconds to mm:ss, flooring sub-second parts: 125.0 -> "02:05". */
export function formatTimestamp(seconds: number): string {
    if (!Number.isFinite(seconds) || seconds < 0) {
        throw new Error(`invalid timestamp: ${seconds}`);
    }
    const whole = Math.floor(seconds);
    const minutes = Math.floor(whole / 60);
    const secs = whole % 60;
    const mm = String(minutes).padStart(2, "0");
    const ss = String(secs).padStart(2, "0");
    return `${mm}:${ss}`;
}

/** Timestamp range with an en dash: 125.0-190.5 s -> "02:05–03:10". */
export function formatRange(startS: number, endS: number): string {
    return `${formatTimestamp(startS)}–${formatTimestamp(endS)}`;
}

/** Scores shown with four decimals, enough to tell close courses apart. */
export function formatScore(value: number): string {
    return value.toFixed(4);
}

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;")
        .replace(/'/g, "&#39;");
}
