#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "rvcyl/io.hpp"

using namespace rvcyl;

TEST(FormatNumber, RoundTripsExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 123456789.125}) {
    const auto s = io::format_number(v);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
    EXPECT_EQ(s.find(','), std::string::npos);
  }
  EXPECT_EQ(io::format_number(0.5), "0.5");
  EXPECT_EQ(io::format_number(std::nan("")), "nan");
}

TEST(Csv, HeaderAndWidthCheck) {
  std::ostringstream out;
  io::CsvWriter csv(out, {"a", "b"});
  csv.row({1.0, 2.5});
  EXPECT_EQ(out.str(), "a,b\n1,2.5\n");
  try {
    csv.row({1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension);
  }
}

TEST(Csv, PathHasOneRowPerNode) {
  const auto grid = make_time_grid(1.0, 8);
  std::ostringstream out;
  io::write_path_csv(out, SamplePath::from_function(grid, [](double t) { return t * t; }));
  const auto text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
  EXPECT_EQ(text.substr(0, 8), "t,value\n");
}

TEST(FieldBinary, LayoutAndRoundTrip) {
  FieldPath u{TimeGrid(0.75, 3), SpaceGrid(4), {}, 9, {1.0}, "test"};
  for (std::size_t c = 0; c < 4 * 5; ++c) u.values.push_back(0.1 * static_cast<double>(c) - 1.0 / 7.0);
  std::ostringstream out(std::ios::binary);
  io::write_field_binary(out, u);
  const auto bytes = out.str();
  ASSERT_EQ(bytes.size(), 24u + 8u * 20u);
  // Little-endian u64 N = 3 first, then P = 4.
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 3);
  for (int i = 1; i < 8; ++i) EXPECT_EQ(bytes[i], 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 4);

  std::istringstream in(bytes, std::ios::binary);
  const auto v = io::read_field_binary(in);
  EXPECT_EQ(v.time.steps(), 3u);
  EXPECT_EQ(v.space.points(), 4u);
  EXPECT_EQ(v.time.horizon(), 0.75);
  EXPECT_EQ(v.values, u.values);
}

TEST(FieldBinary, TruncatedInputRejected) {
  FieldPath u{TimeGrid(1.0, 2), SpaceGrid(4), std::vector<double>(15, 1.0), 0, {1.0}, "test"};
  std::ostringstream out(std::ios::binary);
  io::write_field_binary(out, u);
  auto bytes = out.str();
  bytes.resize(bytes.size() - 5);
  std::istringstream in(bytes, std::ios::binary);
  EXPECT_THROW(io::read_field_binary(in), Error);
}
