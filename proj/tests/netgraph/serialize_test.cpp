#include <gtest/gtest.h>

#include <filesystem>

#include "steerlab/netgraph/architectures.hpp"
#include "steerlab/netgraph/initialize.hpp"
#include "steerlab/netgraph/serialize.hpp"

using namespace steerlab;

namespace {

void expectSameGraph(const NetworkGraph& a, const NetworkGraph& b) {
    ASSERT_EQ(a.nodes.size(), b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        EXPECT_EQ(a.nodes[i].id, b.nodes[i].id);
        EXPECT_EQ(a.nodes[i].kind, b.nodes[i].kind);
        EXPECT_EQ(a.nodes[i].attrs, b.nodes[i].attrs);
        EXPECT_EQ(a.nodes[i].inputs, b.nodes[i].inputs);
    }
    EXPECT_EQ(a.inputs, b.inputs);
    EXPECT_EQ(a.outputs, b.outputs);
    EXPECT_EQ(a.notes, b.notes);
    ASSERT_EQ(a.params.size(), b.params.size());
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        EXPECT_EQ(a.params[i].owner, b.params[i].owner);
        EXPECT_EQ(a.params[i].name, b.params[i].name);
        EXPECT_EQ(a.params[i].fixed, b.params[i].fixed);
        EXPECT_EQ(a.params[i].spatial, b.params[i].spatial);
        EXPECT_EQ(a.params[i].buffer, b.params[i].buffer);
        EXPECT_TRUE(a.params[i].tensor.bitEqual(b.params[i].tensor));
    }
}

std::vector<NetworkGraph> referenceNets() {
    return {buildUNetD(), buildTinyResNet(2, 8), buildTinyDenseNet(2, 4), buildTinySegNet(4, 3),
            initializeSpatial(buildTinyResNet(2, 4), {InitMethod::GHaar, 1})};
}

}  // namespace

TEST(Serialize, RoundTripIsIdentity) {
    for (const NetworkGraph& net : referenceNets()) {
        const SerializedGraph s = serialize(net);
        expectSameGraph(net, deserialize(s.descriptor, s.weights));
        const SerializedGraph again = serialize(deserialize(s.descriptor, s.weights));
        EXPECT_EQ(again.descriptor, s.descriptor);
        EXPECT_EQ(again.weights, s.weights);
    }
}

TEST(Serialize, BlobLengthIsFourBytesPerValue) {
    for (const NetworkGraph& net : referenceNets()) {
        std::size_t values = 0;
        for (const auto& p : net.params) values += p.tensor.size();
        EXPECT_EQ(serialize(net).weights.size(), values * 4);
    }
}

TEST(Serialize, SignedZeroAndSubnormalsSurvive) {
    NetworkGraph net = buildTinySegNet(2, 1);
    auto& w = net.param("layer0.spatial", "weight").tensor;
    w[0] = -0.0f;
    w[1] = 1e-42f;
    const SerializedGraph s = serialize(net);
    expectSameGraph(net, deserialize(s.descriptor, s.weights));
}

TEST(Serialize, FlagEditIsLocal) {
    NetworkGraph net = buildTinyResNet(1, 4);
    const SerializedGraph before = serialize(net);
    net.param("stem.conv", "weight").fixed = true;
    const SerializedGraph after = serialize(net);
    ASSERT_EQ(before.descriptor.size(), after.descriptor.size());
    std::size_t diff = 0;
    for (std::size_t i = 0; i < before.descriptor.size(); ++i) diff += before.descriptor[i] != after.descriptor[i];
    EXPECT_EQ(diff, 1u);
    EXPECT_EQ(before.weights, after.weights);
}

TEST(Serialize, ChecksumMismatch) {
    const SerializedGraph s = serialize(buildTinySegNet(2, 1));
    auto corrupt = s.weights;
    corrupt[3] ^= 0x10;
    try {
        deserialize(s.descriptor, corrupt);
        FAIL() << "expected checksum error";
    } catch (const SerializationError& e) {
        EXPECT_EQ(e.code(), SerializeErrc::Checksum);
    }
}

TEST(Serialize, UnknownKind) {
    SerializedGraph s = serialize(buildTinySegNet(2, 1));
    const auto pos = s.descriptor.find("\"batchNorm\"");
    ASSERT_NE(pos, std::string::npos);
    s.descriptor.replace(pos, 11, "\"layerNorm\"");
    try {
        deserialize(s.descriptor, s.weights);
        FAIL() << "expected unknown kind";
    } catch (const SerializationError& e) {
        EXPECT_EQ(e.code(), SerializeErrc::UnknownKind);
    }
}

TEST(Serialize, OffsetOverlap) {
    SerializedGraph s = serialize(buildTinySegNet(2, 1));
    // Point the second parameter at the first one's bytes.
    const auto first = s.descriptor.find("\"offset\": 0");
    const auto second = s.descriptor.find("\"offset\": ", first + 1);
    ASSERT_NE(second, std::string::npos);
    const auto end = s.descriptor.find_first_of(",\n", second);
    s.descriptor.replace(second, end - second, "\"offset\": 4");
    try {
        deserialize(s.descriptor, s.weights);
        FAIL() << "expected overlap";
    } catch (const SerializationError& e) {
        EXPECT_EQ(e.code(), SerializeErrc::OffsetOverlap);
    }
}

TEST(Serialize, MalformedDescriptor) {
    const SerializedGraph s = serialize(buildTinySegNet(2, 1));
    EXPECT_THROW(deserialize("{not json", s.weights), SerializationError);
    EXPECT_THROW(deserialize("{}", s.weights), SerializationError);
}

TEST(Serialize, FilesRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "steerlab_serialize_test";
    std::filesystem::remove_all(dir);
    const NetworkGraph net = buildTinyDenseNet(2, 4);
    saveGraph(net, dir / "net.nfg");
    EXPECT_TRUE(std::filesystem::exists(dir / "net.nfw"));
    expectSameGraph(net, loadGraph(dir / "net.nfg"));
    EXPECT_THROW(loadGraph(dir / "missing.nfg"), IoError);
    std::filesystem::remove_all(dir);
}
