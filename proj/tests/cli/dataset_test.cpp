#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "steerlab/cli/dataset.hpp"
#include "steerlab/numerics/errors.hpp"

using namespace steerlab;

namespace {

bool sameTensor(const Tensor& a, const Tensor& b) { return a.shape() == b.shape() && a.bitEqual(b); }

}  // namespace

TEST(Dataset, KindNames) {
    EXPECT_EQ(parseDatasetKind("shapes-seg"), DatasetKind::ShapesSeg);
    EXPECT_EQ(parseDatasetKind("blobs-cls5"), DatasetKind::BlobsCls5);
    EXPECT_EQ(toString(DatasetKind::BlobsCls5), "blobs-cls5");
    EXPECT_THROW(parseDatasetKind("mnist"), ConfigError);
    EXPECT_EQ(lossFor(DatasetKind::ShapesSeg), LossKind::PixelwiseBCE);
    EXPECT_EQ(lossFor(DatasetKind::BlobsCls5), LossKind::FocalMultiLabel);
}

TEST(Dataset, ShapesSegShapesAndBinaryMasks) {
    const Dataset d = synthShapesSeg(12, 24, 3);
    EXPECT_EQ(d.inputs.shape(), (Shape{12, 1, 24, 24}));
    EXPECT_EQ(d.targets.shape(), (Shape{12, 1, 24, 24}));
    EXPECT_FALSE(d.mask.has_value());
    for (std::size_t i = 0; i < 12; ++i) {
        double fg = 0;
        for (std::size_t y = 0; y < 24; ++y)
            for (std::size_t x = 0; x < 24; ++x) {
                const float t = d.targets.at(i, 0, y, x);
                ASSERT_TRUE(t == 0.0f || t == 1.0f);
                fg += t;
            }
        EXPECT_GT(fg, 0.0) << "sample " << i << " has no shape";
    }
    EXPECT_NO_THROW(d.validate());
}

TEST(Dataset, ShapesAreBrighterThanBackground) {
    const Dataset d = synthShapesSeg(40, 32, 5);
    double fg = 0, bg = 0, nf = 0, nb = 0;
    for (std::size_t j = 0; j < d.inputs.size(); ++j) {
        if (d.targets[j] > 0.5f) {
            fg += d.inputs[j];
            ++nf;
        } else {
            bg += d.inputs[j];
            ++nb;
        }
    }
    EXPECT_GT(fg / nf - bg / nb, 0.5);
}

TEST(Dataset, BlobsLabelsBalancedAndMaskedAboutTenPercent) {
    const Dataset d = synthBlobsCls5(1000, 32, 11);
    ASSERT_EQ(d.targets.shape(), (Shape{1000, kBlobClasses}));
    ASSERT_TRUE(d.mask.has_value());
    for (std::size_t c = 0; c < kBlobClasses; ++c) {
        double pos = 0, masked = 0;
        for (std::size_t i = 0; i < 1000; ++i) {
            pos += d.targets.at(i, c);
            masked += 1.0f - d.mask->at(i, c);
        }
        EXPECT_NEAR(pos / 1000, 0.5, 0.05) << "class " << c;
        EXPECT_NEAR(masked / 1000, 0.1, 0.03) << "class " << c;
    }
}

TEST(Dataset, SameSeedSameBytesDifferentSeedDifferent) {
    for (DatasetKind kind : {DatasetKind::ShapesSeg, DatasetKind::BlobsCls5}) {
        const std::string a = encodeDataset({kind, synthDataset(kind, 8, 16, 42)});
        const std::string b = encodeDataset({kind, synthDataset(kind, 8, 16, 42)});
        const std::string c = encodeDataset({kind, synthDataset(kind, 8, 16, 43)});
        EXPECT_EQ(a, b);
        EXPECT_NE(a, c);
    }
}

TEST(Dataset, PrefixIsStableAcrossCounts) {
    const Dataset small = synthShapesSeg(3, 16, 9);
    const Dataset large = synthShapesSeg(10, 16, 9);
    EXPECT_TRUE(sameTensor(small.inputs, large.inputs.slice(0, 3)));
}

TEST(Dataset, EncodeDecodeRoundTrip) {
    for (DatasetKind kind : {DatasetKind::ShapesSeg, DatasetKind::BlobsCls5}) {
        const StoredDataset d{kind, synthDataset(kind, 5, 16, 1)};
        const StoredDataset back = decodeDataset(encodeDataset(d));
        EXPECT_EQ(back.kind, kind);
        EXPECT_TRUE(sameTensor(back.data.inputs, d.data.inputs));
        EXPECT_TRUE(sameTensor(back.data.targets, d.data.targets));
        ASSERT_EQ(back.data.mask.has_value(), d.data.mask.has_value());
        if (d.data.mask) {
            EXPECT_TRUE(sameTensor(*back.data.mask, *d.data.mask));
        }
    }
}

TEST(Dataset, EmptyDatasetKeepsShapes) {
    const StoredDataset d{DatasetKind::BlobsCls5, synthBlobsCls5(0, 16, 1)};
    const StoredDataset back = decodeDataset(encodeDataset(d));
    EXPECT_EQ(back.data.size(), 0u);
    EXPECT_EQ(back.data.inputs.shape(), (Shape{0, 1, 16, 16}));
    EXPECT_EQ(back.data.targets.shape(), (Shape{0, kBlobClasses}));
}

TEST(Dataset, CorruptOrTruncatedRejected) {
    const std::string bytes = encodeDataset({DatasetKind::ShapesSeg, synthShapesSeg(2, 8, 0)});
    std::string flipped = bytes;
    flipped[flipped.size() - 3] ^= 0x40;
    EXPECT_THROW(decodeDataset(flipped), IoError);
    EXPECT_THROW(decodeDataset(bytes.substr(0, bytes.size() - 4)), IoError);
    EXPECT_THROW(decodeDataset("not a dataset"), IoError);
}

TEST(Dataset, FileRoundTripAndMissingFile) {
    const auto path = std::filesystem::temp_directory_path() / "steerlab_dataset_test.slds";
    const StoredDataset d{DatasetKind::ShapesSeg, synthShapesSeg(4, 12, 2)};
    saveDataset(d, path);
    EXPECT_TRUE(sameTensor(loadDataset(path).data.inputs, d.data.inputs));
    std::filesystem::remove(path);
    EXPECT_THROW(loadDataset(path), IoError);
}

TEST(Dataset, TooSmallImagesRejected) {
    EXPECT_THROW(synthShapesSeg(1, 4, 0), ConfigError);
    EXPECT_THROW(synthBlobsCls5(1, 4, 0), ConfigError);
}
