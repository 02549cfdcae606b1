records = [
    {'slide': 's1', 'label': 'tumor', 'count': 12},
    {'slide': 's2', 'label': 'normal', 'count': 3},
    {'slide': 's3', 'label': 'tumor', 'count': 7},
    {'slide': 's4', 'label': 'stroma', 'count': 7},
]
by_label = {}
for r in records:
    by_label.setdefault(r['label'], []).append(r['slide'])
print(by_label)
totals = {label: sum(r['count'] for r in records if r['label'] == label) for label in by_label}
print(totals)
ranked = sorted(records, key=lambda r: (-r['count'], r['slide']))
print([r['slide'] for r in ranked])
pairs = list(zip([r['slide'] for r in records], range(10, 50, 10)))
print(pairs, dict(pairs).get('s9', 'none'))
for i, (slide, n) in enumerate(pairs, start=1):
    if n > 20:
        break
    print(i, slide.upper(), n)
counts = [r['count'] for r in records]
print(any(c > 10 for c in counts), all(c > 2 for c in counts), counts.index(7), counts.count(7))
print(' | '.join(str(c).zfill(3) for c in counts))
final_answer({'slide_id': 's1', 'total': sum(counts)})
