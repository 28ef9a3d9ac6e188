/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/
#include "mgdvd/text.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

using namespace mgdvd;

namespace {

struct Run {
    int code{-1};
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(MGDVD_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        r.out.append(buf.data(), n);
    }
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string help_text() {
    std::string all = run("--help").out;
    for (const char* sub : {"gen", "ingest", "train", "detect", "bench", "inspect"}) {
        all += run(std::string(sub) + " --help").out;
    }
    return all;
}

} // namespace

TEST(Cli, HelpMatchesGolden) {
    EXPECT_EQ(help_text(), text::read_file(std::string(MGDVD_TEST_DATA) + "/help.txt"));
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("detect --stream x").code, 2);
    EXPECT_EQ(run("ingest --stream /nonexistent.events").code, 2);
    EXPECT_EQ(run("ingest --stream " + std::string(MGDVD_TEST_DATA) + "/sample.events --window 10 --step 20").code, 2);
    EXPECT_EQ(run("detect --stream a --checkpoint /nonexistent/ck --gallery g").code, 3);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, IngestPrintsWindowTable) {
    auto r = run("ingest --stream " + std::string(MGDVD_TEST_DATA) + "/sample.events");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "window\tnodes\tedges\tdynamic\tchurn\tencoder");
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
}

TEST(Cli, GenerateTrainDetectIsDeterministic) {
    const auto dir = support::temp_dir("cli");
    std::string previous_log;
    std::string previous_ck;
    for (int round = 0; round < 2; ++round) {
        const auto c = dir + "/c" + std::to_string(round);
        ASSERT_EQ(run("gen --count 5 --duration 120 --seed 3 --out " + c).code, 0);
        ASSERT_EQ(run("train --data " + c + " --epochs 3 --seed 3 --dim 16 --embed 8 --out " + c + "/ck --gallery " +
                      c + "/gal")
                      .code,
                  0);
        auto det = run("detect --stream " + c + "/streams/worm-004.events --checkpoint " + c + "/ck --gallery " + c +
                       "/gal --no-timing --keep-running");
        ASSERT_EQ(det.code, 0);
        EXPECT_FALSE(det.out.empty());
        EXPECT_NE(det.out.find("|0.000\n"), std::string::npos);
        const auto ck = text::read_file(c + "/ck");
        if (round == 1) {
            EXPECT_EQ(det.out, previous_log);
            EXPECT_EQ(ck, previous_ck);
            EXPECT_EQ(text::read_file(c + "/gal"), text::read_file(dir + "/c0/gal"));
            EXPECT_EQ(text::read_file(c + "/manifest.tsv"), text::read_file(dir + "/c0/manifest.tsv"));
        }
        previous_log = det.out;
        previous_ck = ck;
    }
    std::filesystem::remove_all(dir);
}
