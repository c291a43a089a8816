#!/usr/bin/env node
// thin launcher: the dist module runs its CLI when loaded as the entry point
import("../dist/render.js");
