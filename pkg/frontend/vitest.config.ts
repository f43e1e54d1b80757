import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // the e2e suite boots the real backend, which takes a moment
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
