#pragma once

namespace deepgroup {

// Raises the glibc mmap and trim thresholds so per-batch training buffers
// are recycled from the heap instead of being mapped and unmapped each step.
// No-op on other C libraries. Call once at startup, before spawning threads.
void tune_allocator();

}  // namespace deepgroup
