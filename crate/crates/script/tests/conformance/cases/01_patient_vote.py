from pathlib import Path

patient_folder = '/data/patients/TCGA-XX-0001'
image_paths = [patient_folder + '/img_' + str(i) + '.png' for i in range(3)]
classes = ['invasive lobular', 'invasive ductal', 'metaplastic']
results = []
for img_path in image_paths:
    result = score_image_with_text(image_path=img_path, classes=classes, apply_softmax=True)
    print(f"Image: {Path(img_path).name}", result)
    results.append(result)

class_probs = {cls: 0.0 for cls in classes}
for result in results:
    for score_str in result['similarity_scores']:
        cls, prob = score_str.split(':')
        cls = cls.strip()
        prob = float(prob.strip())
        class_probs[cls] += prob
print({k: round(v, 3) for k, v in class_probs.items()})
diagnosis = max(class_probs, key=class_probs.get)
patient_id = Path(patient_folder).name
final_answer([{"patient_id": patient_id, "diagnosis": diagnosis}])
