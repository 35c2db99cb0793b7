// Generated by tbgen. Do not edit.
// module top_module (combinational), 2 scenarios, 20 steps
#include "Vtop_module.h"
#include "verilated.h"

static const long kMaxReported = 64;

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace {

long g_failures = 0;

std::string to_binary(uint64_t value, int width) {
    std::string s(width, '0');
    for (int i = 0; i < width; ++i) {
        if ((value >> i) & 1ULL) s[width - 1 - i] = '1';
    }
    return s;
}

std::string words_to_binary(const uint32_t* words, int width) {
    std::string s(width, '0');
    for (int i = 0; i < width; ++i) {
        if ((words[i / 32] >> (i % 32)) & 1U) s[width - 1 - i] = '1';
    }
    return s;
}

void report(const char* scenario, int step, const char* signal, const std::string& expected, const std::string& actual) {
    if (g_failures < kMaxReported) {
        std::printf("MISMATCH scenario=%s step=%d signal=%s expected=%s actual=%s\n", scenario, step, signal,
                    expected.c_str(), actual.c_str());
    }
    ++g_failures;
}

void check(const char* scenario, int step, const char* signal, uint64_t actual, uint64_t expected, int width) {
    const uint64_t mask = width >= 64 ? ~0ULL : ((1ULL << width) - 1ULL);
    actual &= mask;
    if (actual != expected) {
        report(scenario, step, signal, to_binary(expected, width), to_binary(actual, width));
    }
}

void check_wide(const char* scenario, int step, const char* signal, const uint32_t* actual, const uint32_t* expected,
                int width) {
    const int words = (width + 31) / 32;
    std::vector<uint32_t> got(actual, actual + words);
    if (width % 32 != 0) got[words - 1] &= (1U << (width % 32)) - 1U;
    for (int i = 0; i < words; ++i) {
        if (got[i] != expected[i]) {
            report(scenario, step, signal, words_to_binary(expected, width), words_to_binary(got.data(), width));
            return;
        }
    }
}

void scenario_0() {
    const char* id = "exhaustive";
    VerilatedContext* ctx = new VerilatedContext;
    Vtop_module* top = new Vtop_module{ctx};
    // step 0
    top->a = 0x0ULL;  // 00
    top->b = 0x0ULL;  // 00
    top->eval();
    check(id, 0, "s", static_cast<uint64_t>(top->s), 0x0ULL, 3);  // 000
    // step 1
    top->a = 0x0ULL;  // 00
    top->b = 0x1ULL;  // 01
    top->eval();
    check(id, 1, "s", static_cast<uint64_t>(top->s), 0x1ULL, 3);  // 001
    // step 2
    top->a = 0x0ULL;  // 00
    top->b = 0x2ULL;  // 10
    top->eval();
    check(id, 2, "s", static_cast<uint64_t>(top->s), 0x2ULL, 3);  // 010
    // step 3
    top->a = 0x0ULL;  // 00
    top->b = 0x3ULL;  // 11
    top->eval();
    check(id, 3, "s", static_cast<uint64_t>(top->s), 0x3ULL, 3);  // 011
    // step 4
    top->a = 0x1ULL;  // 01
    top->b = 0x0ULL;  // 00
    top->eval();
    check(id, 4, "s", static_cast<uint64_t>(top->s), 0x1ULL, 3);  // 001
    // step 5
    top->a = 0x1ULL;  // 01
    top->b = 0x1ULL;  // 01
    top->eval();
    check(id, 5, "s", static_cast<uint64_t>(top->s), 0x2ULL, 3);  // 010
    // step 6
    top->a = 0x1ULL;  // 01
    top->b = 0x2ULL;  // 10
    top->eval();
    check(id, 6, "s", static_cast<uint64_t>(top->s), 0x3ULL, 3);  // 011
    // step 7
    top->a = 0x1ULL;  // 01
    top->b = 0x3ULL;  // 11
    top->eval();
    check(id, 7, "s", static_cast<uint64_t>(top->s), 0x4ULL, 3);  // 100
    // step 8
    top->a = 0x2ULL;  // 10
    top->b = 0x0ULL;  // 00
    top->eval();
    check(id, 8, "s", static_cast<uint64_t>(top->s), 0x2ULL, 3);  // 010
    // step 9
    top->a = 0x2ULL;  // 10
    top->b = 0x1ULL;  // 01
    top->eval();
    check(id, 9, "s", static_cast<uint64_t>(top->s), 0x3ULL, 3);  // 011
    // step 10
    top->a = 0x2ULL;  // 10
    top->b = 0x2ULL;  // 10
    top->eval();
    check(id, 10, "s", static_cast<uint64_t>(top->s), 0x4ULL, 3);  // 100
    // step 11
    top->a = 0x2ULL;  // 10
    top->b = 0x3ULL;  // 11
    top->eval();
    check(id, 11, "s", static_cast<uint64_t>(top->s), 0x5ULL, 3);  // 101
    // step 12
    top->a = 0x3ULL;  // 11
    top->b = 0x0ULL;  // 00
    top->eval();
    check(id, 12, "s", static_cast<uint64_t>(top->s), 0x3ULL, 3);  // 011
    // step 13
    top->a = 0x3ULL;  // 11
    top->b = 0x1ULL;  // 01
    top->eval();
    check(id, 13, "s", static_cast<uint64_t>(top->s), 0x4ULL, 3);  // 100
    // step 14
    top->a = 0x3ULL;  // 11
    top->b = 0x2ULL;  // 10
    top->eval();
    check(id, 14, "s", static_cast<uint64_t>(top->s), 0x5ULL, 3);  // 101
    // step 15
    top->a = 0x3ULL;  // 11
    top->b = 0x3ULL;  // 11
    top->eval();
    check(id, 15, "s", static_cast<uint64_t>(top->s), 0x6ULL, 3);  // 110
    top->final();
    delete top;
    delete ctx;
}

void scenario_1() {
    const char* id = "corners";
    VerilatedContext* ctx = new VerilatedContext;
    Vtop_module* top = new Vtop_module{ctx};
    // step 0
    top->a = 0x0ULL;  // 00
    top->b = 0x0ULL;  // 00
    top->eval();
    check(id, 0, "s", static_cast<uint64_t>(top->s), 0x0ULL, 3);  // 000
    // step 1
    top->a = 0x3ULL;  // 11
    top->b = 0x3ULL;  // 11
    top->eval();
    check(id, 1, "s", static_cast<uint64_t>(top->s), 0x6ULL, 3);  // 110
    // step 2
    top->a = 0x3ULL;  // 11
    top->b = 0x1ULL;  // 01
    top->eval();
    check(id, 2, "s", static_cast<uint64_t>(top->s), 0x4ULL, 3);  // 100
    // step 3
    top->a = 0x2ULL;  // 10
    top->b = 0x2ULL;  // 10
    top->eval();
    check(id, 3, "s", static_cast<uint64_t>(top->s), 0x4ULL, 3);  // 100
    top->final();
    delete top;
    delete ctx;
}

}  // namespace

int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    scenario_0();
    scenario_1();
    if (g_failures == 0) {
        std::printf("RESULT: PASS\n");
        return 0;
    }
    std::printf("RESULT: FAIL failures=%ld\n", g_failures);
    return 1;
}
