// JSON shapes served by the beamlat tournament API. Field names mirror the
// service verbatim; do not rename.
export const VERDICTS = [
    "FIRST",
    "SECOND",
    "BOTH_GOOD",
    "BOTH_BAD",
];
