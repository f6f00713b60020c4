#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "iktrack/error.hpp"
#include "iktrack/human_chain.hpp"
#include "iktrack/stream_io.hpp"
#include "iktrack/trajectory.hpp"

using namespace iktrack;

namespace {

std::size_t error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        read_stream(in);
    } catch (const ParseError& e) {
        EXPECT_EQ(e.unit(), ParseError::Unit::Line);
        return e.position();
    }
    return 0;
}

const char* kGood =
    R"({"t": 0, "p": [[0,0,1]], "R": [[1,0,0,0,1,0,0,0,1]], "v": [[0,0,0]], "w": [[0,0,0]]})";

}  // namespace

TEST(StreamIo, RoundTripIsExact) {
    const auto model = generate_human_chain(66, 1);
    auto spec = TrajectorySpec::walking(0.2, 4);
    spec.noise = 1e-3;
    const auto gen = generate_stream(model, spec);
    std::stringstream buf;
    write_stream(buf, gen.samples);
    const auto back = read_stream(buf);
    ASSERT_EQ(back.size(), gen.samples.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        EXPECT_EQ(back[k].t, gen.samples[k].t);
        EXPECT_EQ(back[k].positions, gen.samples[k].positions);
        EXPECT_EQ(back[k].rotations, gen.samples[k].rotations);
        EXPECT_EQ(back[k].lin_vels, gen.samples[k].lin_vels);
        EXPECT_EQ(back[k].ang_vels, gen.samples[k].ang_vels);
    }
}

TEST(StreamIo, ErrorsCarryLineNumbers) {
    const std::string good = kGood;
    EXPECT_EQ(error_line(good + "\n" + "{not json}\n"), 2u);
    EXPECT_EQ(error_line(good + "\n\n" + R"({"t": 0.01, "p": [], "R": [], "v": []})"), 3u);
    EXPECT_EQ(error_line(R"({"t": 0, "p": [], "R": [], "v": [], "w": [], "x": 1})"), 1u);
    EXPECT_EQ(error_line(R"({"t": 0, "p": [], "R": [[1,0,0,0,1,0,0,0]], "v": [], "w": [[0,0,0]]})"),
              1u);
    EXPECT_EQ(error_line(R"({"t": 0, "p": [], "R": [[2,0,0,0,1,0,0,0,1]], "v": [], "w": [[0,0,0]]})"),
              1u);
    EXPECT_EQ(error_line(R"({"t": 0, "p": [[0,0]], "R": [], "v": [[0,0,0]], "w": []})"), 1u);
}

TEST(StreamIo, BlankLinesSkipped) {
    std::istringstream in(std::string("\n") + kGood + "\n\n");
    EXPECT_EQ(read_stream(in).size(), 1u);
}

TEST(StreamIo, FilesAndSchemaCheck) {
    const auto path = std::filesystem::temp_directory_path() / "iktrack_stream_test.ndjson";
    const auto model = fixtures::base_only();
    std::vector<TargetSample> samples{
        sample_from_state(model, Configuration::zero(0), Velocity::zero(0), 0.0)};
    save_stream(path, samples);
    EXPECT_EQ(load_stream(path, model).size(), 1u);
    EXPECT_THROW(load_stream(path, fixtures::planar_two_joint()), SchemaMismatch);
    std::filesystem::remove(path);
    EXPECT_THROW(load_stream(path), Error);
}
