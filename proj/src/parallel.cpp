#include "spk/parallel.hpp"

#include <atomic>
#include <cstdlib>

namespace spk {

namespace {

int initial_threads() {
    if (const char* e = std::getenv("SPK_THREADS")) {
        int n = std::atoi(e);
        if (n > 0) return n;
    }
    return 1;
}

std::atomic<int>& setting() {
    static std::atomic<int> n{initial_threads()};
    return n;
}

}  // namespace

void set_num_threads(int n) {
    if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    setting() = n;
}

int num_threads() { return setting(); }

}  // namespace spk
