import { defineConfig } from "vite";

// The dev server proxies API calls to a locally running `edf serve`.
export default defineConfig({
  server: {
    proxy: {
      "/api": "http://127.0.0.1:8732",
    },
  },
  build: {
    outDir: "dist",
  },
});
