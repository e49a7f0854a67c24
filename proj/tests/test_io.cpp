#include <gtest/gtest.h>

#include <fstream>
#include <string>

#include "metarep/io.hpp"

using namespace metarep;

namespace {

std::string write_tmp(const std::string& name, const std::string& content) {
    const std::string path = std::string(TEST_TMP_DIR) + "/" + name;
    std::ofstream(path, std::ios::binary) << content;
    return path;
}

std::string error_of(const std::string& path) {
    try {
        load_dataset(path);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(LoadDataset, ValidFile) {
    const auto d = load_dataset(write_tmp("ok.csv", "study_id,x,sigma\na,0.31,0.12\nb,-0.05,0.2\r\nc,1e-1,0.3\n"));
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d.records[1].study_id, "b");
    EXPECT_DOUBLE_EQ(d.records[1].x, -0.05);
    EXPECT_DOUBLE_EQ(d.records[2].x, 0.1);
    EXPECT_DOUBLE_EQ(d.records[2].sigma, 0.3);
}

TEST(LoadDataset, ColumnOrderFree) {
    const auto d = load_dataset(write_tmp("order.csv", "sigma,study_id,x\n0.1,z,0.4\n"));
    EXPECT_EQ(d.records[0].study_id, "z");
    EXPECT_DOUBLE_EQ(d.records[0].x, 0.4);
}

TEST(LoadDataset, NegativeSigmaNamesRow) {
    const auto msg = error_of(write_tmp("neg.csv", "study_id,x,sigma\na,0.3,0.1\nb,0.2,-0.1\n"));
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
}

TEST(LoadDataset, DuplicateIdNamed) {
    const auto msg = error_of(write_tmp("dup.csv", "study_id,x,sigma\nexp7,0.3,0.1\nexp7,0.2,0.1\n"));
    EXPECT_NE(msg.find("exp7"), std::string::npos) << msg;
}

TEST(LoadDataset, MalformedInputs) {
    EXPECT_NE(error_of(write_tmp("nocol.csv", "study_id,x\na,0.3\n")).find("sigma"), std::string::npos);
    EXPECT_NE(error_of(write_tmp("nonnum.csv", "study_id,x,sigma\na,0.3,0.1\nb,abc,0.1\n")).find("row 2"),
              std::string::npos);
    EXPECT_NE(error_of(write_tmp("cells.csv", "study_id,x,sigma\na,0.3\n")).find("row 1"), std::string::npos);
    EXPECT_NE(error_of(std::string(TEST_TMP_DIR) + "/does_not_exist.csv"), "");
    EXPECT_NE(error_of(write_tmp("empty.csv", "")), "");
}

TEST(PowerRatios, Pool) {
    const auto pool = load_power_ratios(write_tmp("ratios.csv", "x,sigma_r\n0.4,0.1\n-0.3,0.15\n"));
    ASSERT_EQ(pool.size(), 2u);
    EXPECT_DOUBLE_EQ(pool[0], 4.0);
    EXPECT_DOUBLE_EQ(pool[1], 2.0);
    EXPECT_THROW(load_power_ratios(write_tmp("bad_ratios.csv", "x,sigma_r\n0.4,0\n")), DataError);
}

TEST(Reports, NumberFormat) {
    EXPECT_EQ(format_number(0.60123456), "0.601235");
    EXPECT_EQ(format_number(-1.5e-9), "-1.5e-09");
    EXPECT_EQ(format_number(1234567.0), "1.23457e+06");
    EXPECT_EQ(format_number(NAN), "nan");
}

TEST(Reports, CsvTableExactText) {
    CsvTable t{{"beta_p", "replication_rate"}, {}};
    t.add_row({format_number(0.25), format_number(0.6)});
    EXPECT_EQ(t.str(), "beta_p,replication_rate\n0.25,0.6\n");
}

TEST(Reports, DatasetRoundTrip) {
    Dataset d{{{"a", 0.1 + 0.2, 1.0 / 3.0}, {"b", -2.5e-7, 0.2}}};
    const auto back = load_dataset(write_tmp("rt.csv", dataset_csv(d)));
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(back.records[i].x, d.records[i].x);
        EXPECT_EQ(back.records[i].sigma, d.records[i].sigma);
    }
}

TEST(Reports, WriteFailureIsDataError) {
    EXPECT_THROW(write_text("/nonexistent_dir/x.csv", "a"), DataError);
}

TEST(Json, MetricsAndModel) {
    SimulationMetrics m;
    m.replication_rate = 0.6;
    m.rr_insignificant = NAN;
    const nlohmann::json j = m;
    EXPECT_DOUBLE_EQ(j["replication_rate"].get<double>(), 0.6);
    EXPECT_TRUE(j["rr_insignificant"].is_null());
    const ModelParams p{psych_table1().latent, psych_table1().policy};
    const auto back = model_from_json(nlohmann::json::parse(model_to_json(p).dump()));
    EXPECT_EQ(back.latent, p.latent);
    EXPECT_EQ(back.policy, p.policy);
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"theta": 1})")), ConfigError);
}
