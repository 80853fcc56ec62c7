export class BundleError extends Error {}

export class MissingManifestError extends BundleError {}

export class HashMismatchError extends BundleError {}

export class MissingTableError extends BundleError {}
