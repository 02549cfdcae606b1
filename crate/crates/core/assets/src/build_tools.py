"""Writes ../tools.json, the tool catalog rendered into agent prompts.

Kept as a generator so descriptors stay terse here and uniform in the asset.
    python3 build_tools.py
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def p(name, ty, doc, default="__required__"):
    out = {"name": name, "type": ty, "doc": doc}
    if default == "__required__":
        out["required"] = True
    else:
        out["required"] = False
        if default is not None:
            out["default"] = default
    return out


def tool(name, category, description, params, returns, notes=(), prerequisites=(), returns_doc=""):
    return {
        "name": name,
        "category": category,
        "description": description,
        "notes": list(notes),
        "prerequisites": list(prerequisites),
        "params": params,
        "returns": list(returns),
        "returns_doc": returns_doc,
    }


IMG = p("image_path", "path", "Absolute path to the ROI image (PNG, JPG or TIF).")
IMGS = p("image_paths", "str_list", "Absolute paths to the ROI images.")
SLIDE = p("slide_path", "path", "Absolute path to the whole-slide image.")
DEVICE = p("device", "str", "Torch device used for inference.", "cuda:0")
JOB = p("job_dir", "path", "Directory receiving all outputs; created when missing.")
SRC = p("wsi_source", "path", "Directory holding the input slides.")
KEY = lambda k: p("key", "str", "Name under which the result is stored in the slide's zarr store.", k)
CONTOUR = p("contour", "contour", "Polygon as a list of [x, y] pixel coordinates.")
QUERY = p("query", "str", "Natural-language question about the library.")
TOPK = p("top_k", "int", "Number of passages to return.", 3)

TOOLS = [
    # histology_roi
    tool("caption_single_histology_image_tool", "histology_roi",
         "Describe the tissue visible in one histology image in a short free-text caption.",
         [IMG, DEVICE, p("max_new_tokens", "int", "Upper bound on caption length in tokens.", 128)],
         ["caption", "operation_log"]),
    tool("caption_and_summarize_set_of_histology_images_tool", "histology_roi",
         "Caption every image of a set, then condense the captions into one summary.",
         [IMGS, DEVICE, p("summary_instructions", "str", "Extra guidance for the summary.", None)],
         ["captions", "summary", "operation_log"]),
    tool("score_single_histology_image_using_text_tool", "histology_roi",
         "Zero-shot scoring of one histology image against a list of class names using a\nvision-language model.",
         [IMG, p("classes", "str_list", "Candidate class names."), DEVICE,
          p("apply_softmax", "bool", "Turn similarities into probabilities.", True),
          p("prompts", "str_list", "Prompt templates; a generic template is used when None.", None)],
         ["similarity_scores", "operation_log"],
         notes=["`similarity_scores` holds one 'class: value' string per class, in input order."]),
    tool("encode_histology_roi_tool", "histology_roi",
         "Embed a histology ROI into a fixed-length feature vector with a foundation model.",
         [IMG, p("model_name", "str", "Encoder to use.", "conch_v15"), DEVICE],
         ["embedding", "embedding_dim", "operation_log"]),
    # dataset_check
    tool("dataset_of_wsi_get_valid_slide_paths_tool", "dataset_check",
         "List the readable whole-slide images in a directory.",
         [SRC, p("extensions", "str_list", "File extensions to keep.", [".svs", ".tif", ".ndpi"]),
          p("search_nested", "bool", "Descend into subdirectories.", False)],
         ["valid_slide_paths", "number_of_slides", "operation_log"]),
    tool("dataset_of_wsi_check_tissue_segmentation_exists_tool", "dataset_check",
         "Report which slides of a dataset already have tissue segmentation outputs in a job directory.",
         [JOB, SRC], ["slides_with_segmentation", "slides_missing_segmentation", "operation_log"]),
    tool("dataset_of_wsi_check_patch_coordinates_exist_and_schema_tool", "dataset_check",
         "Report which slides have patch coordinate files and whether those files follow the expected schema.",
         [JOB, SRC, p("patch_size", "int", "Patch edge length in pixels.", 256),
          p("magnification", "int", "Target magnification of the patches.", 20)],
         ["slides_with_valid_coordinates", "slides_with_invalid_coordinates", "slides_missing_coordinates", "operation_log"]),
    tool("dataset_of_wsi_check_patch_features_exist_and_schema_tool", "dataset_check",
         "Report which slides have patch feature files and whether their arrays have the expected shape.",
         [JOB, SRC, p("patch_encoder", "str", "Encoder that produced the features.", "conch_v15")],
         ["slides_with_valid_features", "slides_with_invalid_features", "slides_missing_features", "operation_log"]),
    tool("dataset_of_wsi_check_slide_features_exist_and_schema_tool", "dataset_check",
         "Report which slides have slide-level embeddings and whether they follow the expected schema.",
         [JOB, SRC, p("slide_encoder", "str", "Slide encoder that produced the embeddings.", "titan")],
         ["slides_with_valid_features", "slides_with_invalid_features", "slides_missing_features", "operation_log"]),
    # dataset_pipeline
    tool("dataset_of_wsi_tissue_segmentation_tool", "dataset_pipeline",
         "Segment tissue on every slide of a directory and report where the outputs were written.\n"
         "Works on a whole dataset or a chosen subset of slides.\n\n"
         "Segmentation is the entry point of slide pipelines; patching and feature extraction\n"
         "read its contours.",
         [JOB, SRC,
          p("skip_errors", "bool", "Continue past slides that fail.", False),
          p("search_nested", "bool", "Look for slides in subdirectories of `wsi_source`.", False),
          p("holes_are_tissue", "bool", "Fill holes inside tissue contours.", True),
          p("batch_size", "int", "Tiles per inference batch.", 64),
          p("segmentation_model_name", "str", "One of ['grandqc', 'hest'].", "grandqc"),
          p("tissue_seg_confidence_thresh", "float", "Minimum tissue probability.", 0.5),
          p("overwrite", "bool", "Recompute even when outputs exist.", False),
          p("skip_specific_wsi", "str_list", "Slides to leave out.", None),
          p("keep_only_these_wsi", "str_list", "Restrict processing to these slides.", None),
          p("max_workers", "int", "Parallel slide readers.", 16)],
         ["dir_with_geojson_contours", "dir_with_tissue_contours_jpg", "dir_with_slide_thumbnails",
          "tissue_segmentation_log_file", "tissue_segmentation_config_file",
          "number_of_processed_segmentations", "operation_log"],
         notes=["Writes {job_dir}/contours_geojson/{wsi_name}.geojson, {job_dir}/contours/{wsi_name}.jpg,",
                "{job_dir}/thumbnails/{wsi_name}.jpg plus a config and a log file in {job_dir}.",
                "Existing outputs are reused unless overwrite=True.",
                "'grandqc' also removes artifacts such as pen marks; 'hest' does not.",
                "Each GeoJSON holds one feature per tissue region with `tissue_id` and `geometry`."],
         prerequisites=["`job_dir` is writable.", "`wsi_source` holds readable slides."]),
    tool("dataset_of_wsi_patch_coordinate_extraction_tool", "dataset_pipeline",
         "Tile the segmented tissue of every slide into patch coordinates.",
         [JOB, SRC, p("patch_size", "int", "Patch edge length in pixels.", 256),
          p("magnification", "int", "Target magnification.", 20),
          p("overlap", "int", "Overlap between neighbouring patches in pixels.", 0)],
         ["dir_with_patch_coordinates", "number_of_processed_slides", "operation_log"],
         prerequisites=["Tissue segmentation outputs exist in `job_dir`."]),
    tool("dataset_of_wsi_patch_features_extraction_tool", "dataset_pipeline",
         "Encode every extracted patch of every slide with a patch foundation model.",
         [JOB, SRC, p("patch_encoder", "str", "Encoder name.", "conch_v15"),
          p("batch_size", "int", "Patches per batch.", 128), DEVICE],
         ["dir_with_patch_features", "number_of_processed_slides", "feature_dim", "operation_log"],
         prerequisites=["Patch coordinates exist in `job_dir`."]),
    tool("dataset_of_wsi_slide_features_extraction_tool", "dataset_pipeline",
         "Aggregate patch features into one embedding per slide with a slide encoder.",
         [JOB, SRC, p("slide_encoder", "str", "One of ['titan', 'madeleine', 'prism'].", "titan"), DEVICE],
         ["dir_with_slide_features", "number_of_processed_slides", "feature_dim", "operation_log"],
         prerequisites=["Patch features from the matching patch encoder exist in `job_dir`."]),
    tool("dataset_of_wsi_create_score_heatmap_tool", "dataset_pipeline",
         "Render per-patch scores as heatmaps over slide thumbnails.",
         [JOB, SRC, p("scores_file", "path", "CSV with columns slide_id, x, y, score."),
          p("colormap", "str", "Matplotlib colormap name.", "jet")],
         ["dir_with_heatmaps", "number_of_heatmaps", "operation_log"]),
    # docs_retriever
    tool("trident_docs_retriever", "docs_retriever",
         "Return documentation passages of the Trident slide-processing library relevant to a question.",
         [QUERY, TOPK], ["passages"]),
    tool("lazyslide_docs_retriever", "docs_retriever",
         "Return documentation passages of the LazySlide library relevant to a question.",
         [QUERY, TOPK], ["passages"]),
    tool("hovernet_docs_retriever", "docs_retriever",
         "Return documentation passages of the HoVer-Net nuclei model relevant to a question.",
         [QUERY, TOPK], ["passages"]),
    # nuclei_contour
    tool("segment_and_classify_nuclei_in_histology_roi_tool", "nuclei_contour",
         "Find every nucleus in an ROI and assign it one of six cell types.",
         [IMG, DEVICE, p("magnification", "int", "Magnification of the ROI.", 40)],
         ["nuclei", "counts_by_type", "operation_log"],
         notes=["Types: neoplastic, inflammatory, connective, necrotic, epithelial, background.",
                "Each entry of `nuclei` has `id`, `type`, `centroid` [x, y] and `contour` (list of [x, y])."]),
    tool("get_contour_area", "nuclei_contour",
         "Area enclosed by a contour, in squared pixels.",
         [CONTOUR], ["contour_area"],
         notes=["The polygon is closed implicitly; self-intersections are not checked."],
         prerequisites=["At least three points."]),
    tool("get_contour_perimeter", "nuclei_contour",
         "Length of the closed boundary of a contour, in pixels.",
         [CONTOUR], ["contour_perimeter"],
         prerequisites=["At least three points."]),
    tool("get_contour_convex_hull", "nuclei_contour",
         "Convex hull of a set of contour points.",
         [CONTOUR], ["contour_convex_hull"],
         notes=["Vertices are counter-clockwise from the lowest (x, y) point; collinear points are dropped."]),
    # wsi_analysis
    tool("visualize_text_prompt_similarity_on_wsi_tool", "wsi_analysis",
         "Overlay tile-level similarity to a text prompt on a slide thumbnail.",
         [SLIDE, JOB, p("prompt", "str", "Text to compare tiles against."), KEY("tiles")],
         ["figure_path", "operation_log"]),
    tool("predict_wsi_label_tool", "wsi_analysis",
         "Zero-shot slide-level classification from tile embeddings and class names.",
         [SLIDE, p("classes", "str_list", "Candidate labels."), JOB, DEVICE],
         ["predicted_label", "probabilities", "operation_log"]),
    tool("generate_wsi_report_with_prism_tool", "wsi_analysis",
         "Draft a free-text pathology report for a slide from its slide embedding.",
         [SLIDE, JOB, DEVICE], ["report", "operation_log"]),
    tool("caption_single_wsi_tool", "wsi_analysis",
         "Cluster the tiles of a slide, caption representative tiles and merge them into one description.",
         [SLIDE, JOB, p("n_clusters", "int", "Number of morphological clusters.", 8), DEVICE],
         ["caption", "cluster_captions", "operation_log"]),
    tool("score_tiles_by_text_in_a_wsi_tool", "wsi_analysis",
         "Score every tile of a slide against text prompts.",
         [SLIDE, JOB, p("prompts", "str_list", "Texts to score against."), KEY("tiles")],
         ["scores_file", "operation_log"]),
    tool("retrieve_properties_from_wsi_tool", "wsi_analysis",
         "Read scanner metadata of a slide: magnification, pixel size and pyramid layout.",
         [SLIDE],
         ["magnification", "mpp", "level_count", "dimensions", "level_dimensions", "level_downsamples", "vendor"],
         notes=["`mpp` is microns per pixel at level 0.", "`dimensions` is [width, height] at level 0."]),
    tool("get_wsi_level_dimensions_tool", "wsi_analysis",
         "Width and height of one pyramid level of a slide.",
         [SLIDE, p("level", "int", "Pyramid level; 0 is full resolution.", 0)],
         ["level", "width", "height", "downsample"]),
    tool("extract_tissue_in_wsi_tool", "wsi_analysis",
         "Segment the tissue of one slide and return its regions as polygons.",
         [SLIDE, JOB, p("segmentation_model_name", "str", "One of ['grandqc', 'hest'].", "grandqc"), KEY("tissues")],
         ["tissue_contours", "number_of_tissue_regions", "operation_log"],
         notes=["Each entry of `tissue_contours` has `tissue_id` and `contour` in level-0 pixel coordinates."]),
    tool("extract_tissue_tiles_in_wsi_tool", "wsi_analysis",
         "Tile the segmented tissue of one slide.",
         [SLIDE, JOB, p("tile_px", "int", "Tile edge length in pixels.", 256),
          p("mpp", "float", "Target microns per pixel.", 0.5), KEY("tiles")],
         ["number_of_tiles", "tile_key", "operation_log"],
         prerequisites=["Tissue was extracted for this slide."]),
    tool("extract_patch_features_in_wsi_tool", "wsi_analysis",
         "Encode the tiles of one slide with a patch foundation model.",
         [SLIDE, JOB, p("model_name", "str", "Encoder name.", "conch_v15"), KEY("tiles"), DEVICE],
         ["feature_key", "number_of_tiles", "feature_dim", "operation_log"]),
    tool("encode_wsi_tool", "wsi_analysis",
         "Compute a slide-level embedding from the patch features of one slide.",
         [SLIDE, JOB, p("slide_encoder", "str", "Slide encoder name.", "titan"), DEVICE],
         ["slide_feature_key", "feature_dim", "operation_log"]),
    tool("check_tissue_segmentation_key_in_wsi_tool", "wsi_analysis",
         "Whether a tissue segmentation is stored under a key.", [SLIDE, JOB, KEY("tissues")], ["exists", "key"]),
    tool("check_tile_key_in_wsi_tool", "wsi_analysis",
         "Whether tiles are stored under a key.", [SLIDE, JOB, KEY("tiles")], ["exists", "key"]),
    tool("check_patch_features_key_in_wsi_tool", "wsi_analysis",
         "Whether patch features are stored under a key.", [SLIDE, JOB, KEY("conch_v15_tiles")], ["exists", "key"]),
    tool("check_slide_features_key_in_wsi_tool", "wsi_analysis",
         "Whether a slide embedding is stored under a key.", [SLIDE, JOB, KEY("titan_slide")], ["exists", "key"]),
    tool("check_clustering_key_in_wsi_tool", "wsi_analysis",
         "Whether clustering results are stored under a key.", [SLIDE, JOB, KEY("leiden")], ["exists", "key"]),
    tool("check_reduction_key_in_wsi_tool", "wsi_analysis",
         "Whether a dimensionality reduction is stored under a key.", [SLIDE, JOB, KEY("umap")], ["exists", "key"]),
    tool("access_zarr_hierarchy", "wsi_analysis",
         "List the groups and arrays of a slide's zarr store.",
         [p("zarr_path", "path", "Path to the zarr store.")], ["hierarchy"]),
    tool("read_zarr_data_tool", "wsi_analysis",
         "Read one array of a zarr store.",
         [p("zarr_path", "path", "Path to the zarr store."), p("array_path", "str", "Array path inside the store.")],
         ["data", "shape", "dtype"]),
    tool("visualize_wsi_tool", "wsi_analysis",
         "Save a thumbnail of a slide, optionally with tissue contours and tile outlines.",
         [SLIDE, JOB, p("show_tissue", "bool", "Draw tissue contours.", True),
          p("show_tiles", "bool", "Draw tile outlines.", False)],
         ["figure_path", "operation_log"]),
    tool("reduce_single_wsi_patch_feature_space_tool", "wsi_analysis",
         "Project the patch features of one slide to two dimensions.",
         [SLIDE, JOB, p("method", "str", "One of ['pca', 'umap', 'tsne'].", "umap"), KEY("conch_v15_tiles")],
         ["reduction_key", "operation_log"]),
    tool("run_leiden_clustering_tool", "wsi_analysis",
         "Leiden clustering of the patch features of one slide.",
         [SLIDE, JOB, p("resolution", "float", "Leiden resolution.", 1.0), KEY("conch_v15_tiles")],
         ["cluster_key", "number_of_clusters", "cluster_sizes", "operation_log"]),
    tool("visualize_morphological_clusters_on_wsi_tool", "wsi_analysis",
         "Colour the tiles of a slide by cluster and save the figure.",
         [SLIDE, JOB, KEY("leiden")], ["figure_path", "operation_log"]),
    tool("get_topk_close_patch_coords_to_embedding_space_clusters_tool", "wsi_analysis",
         "Coordinates of the k tiles nearest to each cluster centre in feature space.",
         [SLIDE, JOB, p("k", "int", "Tiles per cluster.", 5), KEY("leiden")],
         ["coords_by_cluster", "operation_log"]),
    tool("read_rectangle_region_from_wsi_tool", "wsi_analysis",
         "Crop a rectangle from a slide at a chosen magnification and save it as PNG.",
         [SLIDE, p("x", "int", "Left edge in level-0 pixels."), p("y", "int", "Top edge in level-0 pixels."),
          p("width", "int", "Width at the requested magnification."),
          p("height", "int", "Height at the requested magnification."),
          p("magnification", "float", "Requested magnification.", 20.0), JOB],
         ["region_path", "width", "height", "operation_log"]),
    # wsi_classification
    tool("train_test_wsi_classification_mil_model", "wsi_classification",
         "Train and evaluate a multiple-instance classifier on slide patch features across splits.",
         [JOB, p("splits_dir", "path", "Directory with one CSV per fold."),
          p("features_dir", "path", "Directory with patch features per slide."),
          p("model_type", "str", "One of ['abmil', 'transmil', 'clam'].", "abmil"),
          p("epochs", "int", "Training epochs.", 20), p("seed", "int", "Random seed.", 42), DEVICE],
         ["metrics_per_fold", "mean_auc", "mean_balanced_accuracy", "operation_log"]),
    tool("create_wsi_classification_splits", "wsi_classification",
         "Write stratified train/validation/test splits for a labelled slide table.",
         [p("metadata_csv", "path", "CSV with slide_id and label columns."), JOB,
          p("n_folds", "int", "Number of folds.", 5), p("seed", "int", "Random seed.", 42)],
         ["splits_dir", "fold_sizes", "operation_log"]),
    tool("prepare_wsi_classification_metadata", "wsi_classification",
         "Join slide files with a label table and write the metadata CSV used for training.",
         [SRC, p("labels_csv", "path", "CSV with a patient or slide id and a label."),
          p("label_column", "str", "Column holding the label."), JOB],
         ["metadata_csv", "number_of_slides", "label_counts", "operation_log"]),
]


def main():
    names = [t["name"] for t in TOOLS]
    assert len(names) == len(set(names)) == 49, len(names)
    with open(os.path.join(HERE, "..", "tools.json"), "w") as f:
        json.dump(TOOLS, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
