/**
 * Loop through each of the columns in the given table, migrating each as a resource or relation.
 */
public List<String> migrateColumns(Table table, Resource resource) {
    List<String> migrated = new ArrayList<String>();
    Column[] columns = table.getColumns();
    int resourceCount = 0;
    int relationCount = 0;
    for (Column column : columns) {
        String name = column.getName();
        if (column.isForeignKey()) {
            migrated.add(migrateRelation(resource, name));
        } else {
            migrated.add(migrateResource(resource, name));
        }
    }
    return migrated;
}
